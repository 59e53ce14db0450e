#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "dnas/data.hpp"

using namespace dnas;
namespace fs = std::filesystem;

namespace {

SyntheticConfig small_cfg() {
  SyntheticConfig cfg;
  cfg.num_classes = 8;
  cfg.train_per_class = 10;
  cfg.test_per_class = 5;
  cfg.image_size = 32;
  cfg.seed = 3;
  return cfg;
}

uint64_t hash_tensor(const Tensor& t) {
  uint64_t h = 1469598103934665603ull;
  for (float v : t.data()) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    h = (h ^ bits) * 1099511628211ull;
  }
  return h;
}

fs::path temp_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("dnas_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("synthetic generation is class balanced with the requested sizes") {
  SyntheticConfig cfg = small_cfg();
  cfg.train_per_class = 200;
  cfg.test_per_class = 100;
  auto [train, test] = generate_synthetic(cfg);
  CHECK(train.samples.size() == 1600);
  CHECK(test.samples.size() == 800);
  std::vector<int64_t> counts(8, 0);
  for (const auto& s : train.samples) counts[static_cast<size_t>(s.label)]++;
  for (int64_t c : counts) CHECK(c == 200);
}

TEST_CASE("identical seeds generate bitwise-identical datasets") {
  auto [a_train, a_test] = generate_synthetic(small_cfg());
  auto [b_train, b_test] = generate_synthetic(small_cfg());
  REQUIRE(a_train.samples.size() == b_train.samples.size());
  for (size_t i = 0; i < a_train.samples.size(); ++i)
    CHECK(hash_tensor(a_train.samples[i].image) == hash_tensor(b_train.samples[i].image));
  for (size_t i = 0; i < a_test.samples.size(); ++i)
    CHECK(hash_tensor(a_test.samples[i].image) == hash_tensor(b_test.samples[i].image));
}

TEST_CASE("train and test splits are disjoint and pixels stay in range") {
  auto [train, test] = generate_synthetic(small_cfg());
  std::set<uint64_t> train_hashes;
  for (const auto& s : train.samples) {
    train_hashes.insert(hash_tensor(s.image));
    for (float v : s.image.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  for (const auto& s : test.samples) CHECK(train_hashes.count(hash_tensor(s.image)) == 0);
}

TEST_CASE("cue bounding boxes span a >= 4x area range over many samples") {
  SyntheticConfig cfg = small_cfg();
  cfg.cue_size_range = {0.05f, 0.4f};
  cfg.image_size = 64;
  std::mt19937 rng(11);
  int64_t min_area = std::numeric_limits<int64_t>::max(), max_area = 0;
  for (int i = 0; i < 200; ++i) {
    CueBox box;
    render_synthetic_sample(cfg, 0, rng, &box);
    min_area = std::min(min_area, box.area());
    max_area = std::max(max_area, box.area());
  }
  CHECK(min_area > 0);
  CHECK(max_area >= 4 * min_area);
}

TEST_CASE("ppm container round-trips within 8-bit quantization") {
  std::mt19937 rng(4);
  Tensor img = Tensor::uniform({3, 13, 9}, rng, 0, 1);
  const fs::path dir = temp_dir("ppm");
  const std::string path = (dir / "x.ppm").string();
  write_ppm(path, img);
  Tensor back = read_ppm(path);
  REQUIRE(back.shape() == img.shape());
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::abs(back.data()[i] - img.data()[i]) <= 0.5f / 255.0f + 1e-6f);
}

TEST_CASE("directory loader maps sorted subdirectories to class indices") {
  const fs::path root = temp_dir("loader");
  std::mt19937 rng(5);
  for (int k = 0; k < 10; ++k) {
    const fs::path cls = root / ("c" + std::to_string(k));
    fs::create_directories(cls);
    for (int i = 0; i < 3; ++i)
      write_ppm((cls / ("img" + std::to_string(i) + ".ppm")).string(),
                Tensor::uniform({3, 16, 16}, rng, 0, 1));
  }
  Dataset ds = load_image_directory(root.string(), 16);
  CHECK(ds.num_classes == 10);
  CHECK(ds.samples.size() == 30);
  std::set<int64_t> labels;
  for (const auto& s : ds.samples) labels.insert(s.label);
  CHECK(*labels.begin() == 0);
  CHECK(*labels.rbegin() == 9);
}

TEST_CASE("loader skips unreadable files and rejects empty classes") {
  const fs::path root = temp_dir("loader_bad");
  std::mt19937 rng(6);
  fs::create_directories(root / "a");
  write_ppm((root / "a" / "good.ppm").string(), Tensor::uniform({3, 8, 8}, rng, 0, 1));
  std::ofstream(root / "a" / "garbage.ppm") << "not a ppm";
  Dataset ds = load_image_directory(root.string(), 8);
  CHECK(ds.samples.size() == 1);  // the garbage file was skipped

  fs::create_directories(root / "b");  // empty class directory
  CHECK_THROWS_AS(load_image_directory(root.string(), 8), InvalidInput);

  const fs::path empty = temp_dir("loader_empty");
  CHECK_THROWS_AS(load_image_directory(empty.string(), 8), InvalidInput);
  CHECK_THROWS_AS(load_image_directory((empty / "missing").string(), 8), InvalidInput);
}

TEST_CASE("exported datasets reload with identical labels") {
  auto [train, test] = generate_synthetic(small_cfg());
  const fs::path root = temp_dir("export");
  export_dataset(test, root.string());
  Dataset back = load_image_directory(root.string(), test.image_size);
  CHECK(back.samples.size() == test.samples.size());
  CHECK(back.num_classes == test.num_classes);
  std::vector<int64_t> counts(static_cast<size_t>(back.num_classes), 0);
  for (const auto& s : back.samples) counts[static_cast<size_t>(s.label)]++;
  for (int64_t c : counts) CHECK(c == small_cfg().test_per_class);
}

TEST_CASE("test-mode preprocess takes the exact center crop") {
  // Pixel value encodes its own coordinates, so crops are identifiable.
  Tensor img = Tensor::zeros({1, 256, 256});
  for (int64_t y = 0; y < 256; ++y)
    for (int64_t x = 0; x < 256; ++x) img.data()[y * 256 + x] = static_cast<float>(y * 256 + x);
  std::mt19937 rng(7);
  Tensor out = preprocess(img, PreprocessMode::test, 256, 224, rng);
  CHECK(out.shape() == Shape{1, 224, 224});
  CHECK(out.data()[0] == doctest::Approx(16.0f * 256.0f + 16.0f));  // offset (16,16)
  CHECK(out.data()[223] == doctest::Approx(16.0f * 256.0f + 16.0f + 223.0f));
}

TEST_CASE("train-mode preprocess offsets stay within the crop budget") {
  Tensor img = Tensor::zeros({1, 256, 256});
  for (int64_t y = 0; y < 256; ++y)
    for (int64_t x = 0; x < 256; ++x) img.data()[y * 256 + x] = static_cast<float>(y * 256 + x);
  std::mt19937 rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    Tensor out = preprocess(img, PreprocessMode::train, 256, 224, rng);
    const int64_t top_left = static_cast<int64_t>(out.data()[0]);
    const int64_t oy = top_left / 256, ox = top_left % 256;
    CHECK(oy >= 0);
    CHECK(oy <= 32);
    CHECK(ox >= 0);
    CHECK(ox <= 32);
  }
  CHECK_THROWS_AS(preprocess(img, PreprocessMode::train, 128, 224, rng), InvalidInput);
}

TEST_CASE("resizing a constant image keeps it constant") {
  Tensor img = Tensor::full({3, 17, 31}, 0.42f);
  Tensor out = bilinear_resize(img, 256, 256);
  for (float v : out.data()) CHECK(v == doctest::Approx(0.42f).epsilon(1e-6));
}

TEST_CASE("clip sampling follows floor(i*T/num) with duplication") {
  // Frame t is a constant image of value t.
  auto make_frames = [](int64_t T) {
    Tensor frames = Tensor::zeros({T, 3, 8, 8});
    for (int64_t t = 0; t < T; ++t)
      for (int64_t i = 0; i < 3 * 64; ++i)
        frames.data()[t * 3 * 64 + i] = static_cast<float>(t);
    return frames;
  };
  {
    Tensor clip = sample_clip(make_frames(16), 16, 4);
    CHECK(clip.shape() == Shape{3, 16, 4, 4});
    for (int64_t i = 0; i < 16; ++i) CHECK(clip.data()[i * 16] == doctest::Approx(i));
  }
  {
    Tensor clip = sample_clip(make_frames(32), 16, 4);
    for (int64_t i = 0; i < 16; ++i) CHECK(clip.data()[i * 16] == doctest::Approx(2 * i));
  }
  {
    Tensor clip = sample_clip(make_frames(4), 16, 4);
    for (int64_t i = 0; i < 16; ++i) CHECK(clip.data()[i * 16] == doctest::Approx(i / 4));
  }
  CHECK_THROWS_AS(sample_clip(Tensor::zeros({3, 8, 8}), 16, 4), InvalidInput);
  CHECK_THROWS_AS(Tensor::zeros({0, 3, 8, 8}), InvalidInput);  // empty clips are unrepresentable
}

TEST_CASE("batching is deterministic and covers the dataset") {
  auto [train, test] = generate_synthetic(small_cfg());
  auto batches = make_batches(test, 16, nullptr);
  int64_t total = 0;
  for (const auto& b : batches) total += b.images.dim(0);
  CHECK(total == static_cast<int64_t>(test.samples.size()));
  // One-hot labels match the integer labels.
  for (const auto& b : batches)
    for (int64_t i = 0; i < b.images.dim(0); ++i) {
      CHECK(b.onehot.data()[i * test.num_classes + b.labels[static_cast<size_t>(i)]] == 1.0f);
    }
  std::mt19937 r1(9), r2(9);
  auto s1 = make_batches(test, 16, &r1);
  auto s2 = make_batches(test, 16, &r2);
  CHECK(s1[0].labels == s2[0].labels);
}
