#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dnas/tensor.hpp"

namespace dnas {

struct SyntheticConfig {
  int64_t num_classes = 8;
  int64_t train_per_class = 200;
  int64_t test_per_class = 100;
  int64_t image_size = 224;
  int64_t background_complexity = 6;          // distractor shapes per image
  std::pair<float, float> cue_size_range = {0.05f, 0.4f};   // fraction of image side
  std::pair<float, float> illumination_range = {0.5f, 1.5f};
  uint64_t seed = 1;
};

struct Sample {
  Tensor image;   // [C,H,W], values in [0,1]
  int64_t label;
};

struct Dataset {
  std::vector<Sample> samples;
  std::string split;       // "train" or "test"
  int64_t num_classes = 0;
  int64_t channels = 3;
  int64_t image_size = 0;
};

// Pixel bounding box of the class cue of one rendered image.
struct CueBox {
  int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open
  int64_t area() const { return (x1 - x0) * (y1 - y0); }
};

// Renders one cabin image of the given class; all randomness is drawn from
// rng in a fixed order.
Tensor render_synthetic_sample(const SyntheticConfig& cfg, int64_t label, std::mt19937& rng,
                               CueBox* cue = nullptr);

// Shared cabin background, class-specific localized cues with sizes drawn
// from cue_size_range, global illumination factor from illumination_range.
// Train/test use disjoint seed streams.
std::pair<Dataset, Dataset> generate_synthetic(const SyntheticConfig& cfg);

// ---- image container (binary PPM/PGM, 8-bit, dimensions in header) ---------

void write_ppm(const std::string& path, const Tensor& image);
Tensor read_ppm(const std::string& path);

// Writes root/class_XXX/img_XXXXX.ppm for every sample.
void export_dataset(const Dataset& ds, const std::string& root);

// One subdirectory per class; class index = lexicographic rank of the
// subdirectory name. Unreadable files are skipped with a warning; a class
// directory without a single readable image is an error.
Dataset load_image_directory(const std::string& root, int64_t image_size);

// ---- preprocessing -----------------------------------------------------------

Tensor bilinear_resize(const Tensor& image, int64_t out_h, int64_t out_w);

enum class PreprocessMode { train, test };

// Resize then crop: random offset in train mode, center crop in test mode.
Tensor preprocess(const Tensor& image, PreprocessMode mode, int64_t resize, int64_t crop,
                  std::mt19937& rng, bool hflip = false);

// Uniform temporal sampling of a [T,C,H,W] frame stack into
// [C,num_frames,size,size]; short clips duplicate frames (index floor(i*T/num)).
Tensor sample_clip(const Tensor& frames, int64_t num_frames = 16, int64_t size = 112);

// ---- batching ----------------------------------------------------------------

struct Batch {
  Tensor images;   // [B,C,H,W]
  Tensor onehot;   // [B,K]
  std::vector<int64_t> labels;
};

// Deterministic batches; when rng is non-null the order is shuffled with it
// first. The final batch may be smaller.
std::vector<Batch> make_batches(const Dataset& ds, int64_t batch_size, std::mt19937* rng);

}  // namespace dnas
