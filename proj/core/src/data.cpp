#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "dnas/data.hpp"

namespace fs = std::filesystem;

namespace dnas {

namespace {

struct Rgb {
  float r, g, b;
};

struct Painter {
  float* data;  // [3,S,S]
  int64_t S;
  // Tracks the painted bounding box when enabled.
  bool track = false;
  int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  void put(int64_t x, int64_t y, Rgb c, float alpha = 1.0f) {
    if (x < 0 || y < 0 || x >= S || y >= S) return;
    float* r = data + y * S + x;
    r[0] = r[0] * (1 - alpha) + c.r * alpha;
    r[S * S] = r[S * S] * (1 - alpha) + c.g * alpha;
    r[2 * S * S] = r[2 * S * S] * (1 - alpha) + c.b * alpha;
    if (track) {
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x + 1);
      y1 = std::max(y1, y + 1);
    }
  }

  void begin_track() {
    track = true;
    x0 = S;
    y0 = S;
    x1 = 0;
    y1 = 0;
  }

  void rect(int64_t cx, int64_t cy, int64_t w, int64_t h, Rgb c) {
    for (int64_t y = cy - h / 2; y < cy - h / 2 + h; ++y)
      for (int64_t x = cx - w / 2; x < cx - w / 2 + w; ++x) put(x, y, c);
  }

  void disk(int64_t cx, int64_t cy, int64_t radius, Rgb c) {
    for (int64_t y = cy - radius; y <= cy + radius; ++y)
      for (int64_t x = cx - radius; x <= cx + radius; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) put(x, y, c);
  }

  void ring(int64_t cx, int64_t cy, int64_t radius, int64_t thick, Rgb c) {
    const int64_t inner = std::max<int64_t>(0, radius - thick);
    for (int64_t y = cy - radius; y <= cy + radius; ++y)
      for (int64_t x = cx - radius; x <= cx + radius; ++x) {
        const int64_t d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        if (d2 <= radius * radius && d2 >= inner * inner) put(x, y, c);
      }
  }

  void diamond(int64_t cx, int64_t cy, int64_t radius, Rgb c) {
    for (int64_t y = cy - radius; y <= cy + radius; ++y)
      for (int64_t x = cx - radius; x <= cx + radius; ++x)
        if (std::llabs(x - cx) + std::llabs(y - cy) <= radius) put(x, y, c);
  }
};

constexpr std::array<Rgb, 8> kPalette{{{0.90f, 0.20f, 0.20f},
                                       {0.20f, 0.85f, 0.25f},
                                       {0.25f, 0.35f, 0.95f},
                                       {0.95f, 0.85f, 0.20f},
                                       {0.90f, 0.30f, 0.85f},
                                       {0.25f, 0.85f, 0.90f},
                                       {0.95f, 0.55f, 0.15f},
                                       {0.95f, 0.95f, 0.95f}}};

constexpr std::array<std::pair<float, float>, 8> kAnchors{{{0.25f, 0.22f},
                                                           {0.75f, 0.22f},
                                                           {0.20f, 0.52f},
                                                           {0.80f, 0.52f},
                                                           {0.50f, 0.30f},
                                                           {0.32f, 0.78f},
                                                           {0.68f, 0.78f},
                                                           {0.50f, 0.62f}}};

void draw_cabin_background(Painter& p, const SyntheticConfig& cfg, std::mt19937& rng) {
  const int64_t S = p.S;
  // Horizontal gradient: bright windshield on top, dark dashboard below.
  for (int64_t y = 0; y < S; ++y) {
    const float shade = 0.55f - 0.35f * static_cast<float>(y) / static_cast<float>(S);
    for (int64_t x = 0; x < S; ++x) p.put(x, y, {shade + 0.05f, shade + 0.05f, shade + 0.10f});
  }
  // Windshield trapezoid.
  for (int64_t y = 0; y < S / 3; ++y) {
    const int64_t inset = (S / 6) * (S / 3 - y) / (S / 3);
    for (int64_t x = inset; x < S - inset; ++x) p.put(x, y, {0.62f, 0.68f, 0.78f});
  }
  // Dashboard bar and seat block.
  p.rect(S / 2, S / 3 + S / 16, S, S / 8, {0.22f, 0.20f, 0.19f});
  p.rect(S / 2, (7 * S) / 8, (3 * S) / 4, S / 4, {0.28f, 0.24f, 0.22f});
  // Steering wheel.
  p.ring(S / 2, (5 * S) / 8, S / 5, std::max<int64_t>(2, S / 40), {0.15f, 0.15f, 0.17f});
  // Per-image distractor shapes shared across classes.
  std::uniform_real_distribution<float> u01(0.0f, 1.0f);
  for (int64_t i = 0; i < cfg.background_complexity; ++i) {
    const int64_t cx = static_cast<int64_t>(u01(rng) * (S - 1));
    const int64_t cy = static_cast<int64_t>(u01(rng) * (S - 1));
    const int64_t side = std::max<int64_t>(2, static_cast<int64_t>((0.02f + 0.05f * u01(rng)) * S));
    const float g = 0.15f + 0.5f * u01(rng);
    if (u01(rng) < 0.5f) {
      p.rect(cx, cy, side, side, {g, g, g});
    } else {
      p.disk(cx, cy, side / 2, {g, g, g});
    }
  }
}

void draw_cue(Painter& p, const SyntheticConfig& cfg, int64_t label, std::mt19937& rng) {
  const int64_t S = p.S;
  std::uniform_real_distribution<float> size_u(cfg.cue_size_range.first, cfg.cue_size_range.second);
  std::uniform_real_distribution<float> jitter(-0.12f, 0.12f);
  const int64_t side = std::max<int64_t>(3, static_cast<int64_t>(size_u(rng) * S));
  const auto anchor = kAnchors[static_cast<size_t>(label % 8)];
  const Rgb color = kPalette[static_cast<size_t>(label % 8)];
  const int64_t half = side / 2;
  auto clamp_c = [&](float frac) {
    int64_t c = static_cast<int64_t>(frac * S);
    return std::clamp<int64_t>(c, half + 1, S - half - 2);
  };
  const int64_t cx = clamp_c(anchor.first + jitter(rng));
  const int64_t cy = clamp_c(anchor.second + jitter(rng));

  p.begin_track();
  switch (label % 8) {
    case 0: p.disk(cx, cy, half, color); break;
    case 1: p.rect(cx, cy, side, side, color); break;
    case 2: p.ring(cx, cy, half, std::max<int64_t>(2, half / 3), color); break;
    case 3: p.rect(cx, cy, side, std::max<int64_t>(2, side / 3), color); break;
    case 4: p.rect(cx, cy, std::max<int64_t>(2, side / 3), side, color); break;
    case 5:
      p.rect(cx, cy, side, std::max<int64_t>(2, side / 4), color);
      p.rect(cx, cy, std::max<int64_t>(2, side / 4), side, color);
      break;
    case 6: p.diamond(cx, cy, half, color); break;
    default:
      p.disk(cx - half / 2, cy, std::max<int64_t>(2, half / 2), color);
      p.disk(cx + half / 2, cy, std::max<int64_t>(2, half / 2), color);
      break;
  }
  p.track = false;
}

}  // namespace

Tensor render_synthetic_sample(const SyntheticConfig& cfg, int64_t label, std::mt19937& rng,
                               CueBox* cue) {
  check_input(cfg.num_classes >= 2, "synthetic: need at least 2 classes");
  check_input(label >= 0 && label < cfg.num_classes, "synthetic: label out of range");
  check_input(cfg.cue_size_range.first > 0.0f && cfg.cue_size_range.second < 1.0f &&
                  cfg.cue_size_range.first <= cfg.cue_size_range.second,
              "synthetic: cue sizes must lie in (0,1) and be ordered");
  check_input(cfg.illumination_range.first > 0.0f &&
                  cfg.illumination_range.first <= cfg.illumination_range.second,
              "synthetic: illumination range must be positive and ordered");
  const int64_t S = cfg.image_size;
  Tensor img = Tensor::zeros({3, S, S});
  Painter p{img.data().data(), S};

  draw_cabin_background(p, cfg, rng);
  draw_cue(p, cfg, label, rng);
  if (cue) *cue = CueBox{p.x0, p.y0, p.x1, p.y1};

  // Pixel noise, then the global illumination factor.
  std::uniform_real_distribution<float> noise(-0.02f, 0.02f);
  std::uniform_real_distribution<float> illum(cfg.illumination_range.first,
                                              cfg.illumination_range.second);
  auto d = img.data();
  for (auto& v : d) v += noise(rng);
  const float f = illum(rng);
  for (auto& v : d) v = std::clamp(v * f, 0.0f, 1.0f);
  return img;
}

namespace {

Dataset generate_split(const SyntheticConfig& cfg, int64_t per_class, const std::string& split,
                       uint64_t stream_seed) {
  Dataset ds;
  ds.split = split;
  ds.num_classes = cfg.num_classes;
  ds.image_size = cfg.image_size;
  std::mt19937 rng(static_cast<uint32_t>(stream_seed));
  for (int64_t i = 0; i < per_class; ++i) {
    for (int64_t k = 0; k < cfg.num_classes; ++k) {
      ds.samples.push_back({render_synthetic_sample(cfg, k, rng), k});
    }
  }
  return ds;
}

}  // namespace

std::pair<Dataset, Dataset> generate_synthetic(const SyntheticConfig& cfg) {
  check_input(cfg.train_per_class >= 1 && cfg.test_per_class >= 1,
              "synthetic: per-class counts must be positive");
  check_input(cfg.image_size >= 16, "synthetic: image size too small");
  // Distinct deterministic streams keep the splits disjoint.
  Dataset train = generate_split(cfg, cfg.train_per_class, "train", cfg.seed * 0x9E3779B9ull + 1);
  Dataset test = generate_split(cfg, cfg.test_per_class, "test", cfg.seed * 0x9E3779B9ull + 2);
  return {std::move(train), std::move(test)};
}

// ---- PPM container -------------------------------------------------------------

void write_ppm(const std::string& path, const Tensor& image) {
  check_input(image.ndim() == 3 && (image.dim(0) == 3 || image.dim(0) == 1),
              "write_ppm: image must be [3,H,W] or [1,H,W]");
  const int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  std::ofstream out(path, std::ios::binary);
  check_input(out.good(), "write_ppm: cannot open " + path);
  out << (C == 3 ? "P6" : "P5") << "\n" << W << " " << H << "\n255\n";
  auto d = image.data();
  std::vector<unsigned char> row(static_cast<size_t>(W * C));
  for (int64_t y = 0; y < H; ++y) {
    for (int64_t x = 0; x < W; ++x)
      for (int64_t c = 0; c < C; ++c) {
        const float v = std::clamp(d[(c * H + y) * W + x], 0.0f, 1.0f);
        row[static_cast<size_t>(x * C + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  check_input(out.good(), "write_ppm: write failed for " + path);
}

namespace {

int next_token(std::istream& in) {
  // Skips whitespace and '#' comments, per the netpbm header format.
  int c = in.get();
  while (c == '#' || std::isspace(c)) {
    if (c == '#') {
      while (c != '\n' && c != EOF) c = in.get();
    }
    c = in.get();
  }
  int value = 0;
  bool any = false;
  while (std::isdigit(c)) {
    value = value * 10 + (c - '0');
    any = true;
    c = in.get();
  }
  if (!any) throw InvalidInput("ppm: malformed header");
  return value;
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check_input(in.good(), "read_ppm: cannot open " + path);
  char m0 = static_cast<char>(in.get());
  char m1 = static_cast<char>(in.get());
  check_input(m0 == 'P' && (m1 == '6' || m1 == '5'), "read_ppm: not a binary PPM/PGM: " + path);
  const int64_t C = m1 == '6' ? 3 : 1;
  const int64_t W = next_token(in);
  const int64_t H = next_token(in);
  const int64_t maxval = next_token(in);
  check_input(maxval == 255, "read_ppm: only 8-bit images supported: " + path);
  check_input(W >= 1 && H >= 1, "read_ppm: bad dimensions in " + path);
  std::vector<unsigned char> raw(static_cast<size_t>(W * H * C));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  check_input(in.gcount() == static_cast<std::streamsize>(raw.size()),
              "read_ppm: truncated pixel data in " + path);
  Tensor img = Tensor::zeros({C, H, W});
  auto d = img.data();
  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x)
      for (int64_t c = 0; c < C; ++c)
        d[(c * H + y) * W + x] =
            static_cast<float>(raw[static_cast<size_t>((y * W + x) * C + c)]) / 255.0f;
  return img;
}

void export_dataset(const Dataset& ds, const std::string& root) {
  fs::create_directories(root);
  for (int64_t k = 0; k < ds.num_classes; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "class_%03lld", static_cast<long long>(k));
    fs::create_directories(fs::path(root) / buf);
  }
  std::vector<int64_t> counter(static_cast<size_t>(ds.num_classes), 0);
  for (const auto& s : ds.samples) {
    char cls[32], name[32];
    std::snprintf(cls, sizeof(cls), "class_%03lld", static_cast<long long>(s.label));
    std::snprintf(name, sizeof(name), "img_%05lld.ppm",
                  static_cast<long long>(counter[static_cast<size_t>(s.label)]++));
    write_ppm((fs::path(root) / cls / name).string(), s.image);
  }
}

Dataset load_image_directory(const std::string& root, int64_t image_size) {
  check_input(fs::is_directory(root), "load_image_directory: not a directory: " + root);
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  check_input(!class_dirs.empty(), "load_image_directory: no class subdirectories in " + root);

  Dataset ds;
  ds.split = "load";
  ds.num_classes = static_cast<int64_t>(class_dirs.size());
  ds.image_size = image_size;
  for (size_t k = 0; k < class_dirs.size(); ++k) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[k]))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int64_t loaded = 0;
    for (const auto& f : files) {
      try {
        Tensor img = read_ppm(f.string());
        if (img.dim(1) != image_size || img.dim(2) != image_size)
          img = bilinear_resize(img, image_size, image_size);
        if (img.dim(0) == 1) {
          // Replicate grayscale to three channels.
          Tensor rgb = Tensor::zeros({3, image_size, image_size});
          for (int64_t c = 0; c < 3; ++c)
            std::copy(img.data().begin(), img.data().end(),
                      rgb.data().begin() + c * image_size * image_size);
          img = rgb;
        }
        ds.samples.push_back({img, static_cast<int64_t>(k)});
        ++loaded;
      } catch (const InvalidInput& e) {
        std::cerr << "warning: skipping " << f << ": " << e.what() << "\n";
      }
    }
    check_input(loaded > 0, "load_image_directory: class directory has no readable images: " +
                                class_dirs[k].string());
  }
  return ds;
}

// ---- preprocessing --------------------------------------------------------------

Tensor bilinear_resize(const Tensor& image, int64_t out_h, int64_t out_w) {
  check_input(image.ndim() == 3, "bilinear_resize: image must be [C,H,W]");
  check_input(out_h >= 1 && out_w >= 1, "bilinear_resize: bad target size");
  const int64_t C = image.dim(0), H = image.dim(1), W = image.dim(2);
  if (H == out_h && W == out_w) return image.detach();
  Tensor out = Tensor::zeros({C, out_h, out_w});
  auto src = image.data();
  auto dst = out.data();
  const float sy = static_cast<float>(H) / static_cast<float>(out_h);
  const float sx = static_cast<float>(W) / static_cast<float>(out_w);
  for (int64_t c = 0; c < C; ++c) {
    const float* plane = src.data() + c * H * W;
    for (int64_t y = 0; y < out_h; ++y) {
      const float fy = std::clamp((static_cast<float>(y) + 0.5f) * sy - 0.5f, 0.0f,
                                  static_cast<float>(H - 1));
      const int64_t y0 = static_cast<int64_t>(fy);
      const int64_t y1 = std::min(y0 + 1, H - 1);
      const float wy = fy - static_cast<float>(y0);
      for (int64_t x = 0; x < out_w; ++x) {
        const float fx = std::clamp((static_cast<float>(x) + 0.5f) * sx - 0.5f, 0.0f,
                                    static_cast<float>(W - 1));
        const int64_t x0 = static_cast<int64_t>(fx);
        const int64_t x1 = std::min(x0 + 1, W - 1);
        const float wx = fx - static_cast<float>(x0);
        const float top = plane[y0 * W + x0] * (1 - wx) + plane[y0 * W + x1] * wx;
        const float bot = plane[y1 * W + x0] * (1 - wx) + plane[y1 * W + x1] * wx;
        dst[(c * out_h + y) * out_w + x] = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Tensor preprocess(const Tensor& image, PreprocessMode mode, int64_t resize, int64_t crop,
                  std::mt19937& rng, bool hflip) {
  check_input(image.ndim() == 3 && image.dim(1) >= 1 && image.dim(2) >= 1,
              "preprocess: image must be [C,H,W]");
  check_input(crop <= resize, "preprocess: crop " + std::to_string(crop) +
                                  " larger than resize " + std::to_string(resize));
  Tensor resized = bilinear_resize(image, resize, resize);
  int64_t oy, ox;
  if (mode == PreprocessMode::train) {
    std::uniform_int_distribution<int64_t> off(0, resize - crop);
    oy = off(rng);
    ox = off(rng);
  } else {
    oy = (resize - crop) / 2;
    ox = (resize - crop) / 2;
  }
  const int64_t C = resized.dim(0);
  Tensor out = Tensor::zeros({C, crop, crop});
  auto src = resized.data();
  auto dst = out.data();
  bool flip = false;
  if (hflip && mode == PreprocessMode::train) {
    std::uniform_int_distribution<int> coin(0, 1);
    flip = coin(rng) == 1;
  }
  for (int64_t c = 0; c < C; ++c)
    for (int64_t y = 0; y < crop; ++y)
      for (int64_t x = 0; x < crop; ++x) {
        const int64_t sx = flip ? (ox + crop - 1 - x) : (ox + x);
        dst[(c * crop + y) * crop + x] = src[(c * resize + (oy + y)) * resize + sx];
      }
  return out;
}

Tensor sample_clip(const Tensor& frames, int64_t num_frames, int64_t size) {
  check_input(frames.ndim() == 4 && frames.dim(0) >= 1,
              "sample_clip: frames must be a non-empty [T,C,H,W] stack");
  check_input(num_frames >= 1 && size >= 1, "sample_clip: bad target shape");
  const int64_t T = frames.dim(0), C = frames.dim(1), H = frames.dim(2), W = frames.dim(3);
  Tensor out = Tensor::zeros({C, num_frames, size, size});
  auto dst = out.data();
  for (int64_t i = 0; i < num_frames; ++i) {
    const int64_t t = i * T / num_frames;  // floor(i*T/num_frames)
    Tensor frame = Tensor::zeros({C, H, W});
    std::copy(frames.data().begin() + t * C * H * W, frames.data().begin() + (t + 1) * C * H * W,
              frame.data().begin());
    Tensor small = bilinear_resize(frame, size, size);
    for (int64_t c = 0; c < C; ++c)
      std::copy(small.data().begin() + c * size * size,
                small.data().begin() + (c + 1) * size * size,
                dst.begin() + (c * num_frames + i) * size * size);
  }
  return out;
}

std::vector<Batch> make_batches(const Dataset& ds, int64_t batch_size, std::mt19937* rng) {
  check_input(!ds.samples.empty(), "make_batches: empty dataset");
  check_input(batch_size >= 1, "make_batches: batch size must be >= 1");
  std::vector<int64_t> order(ds.samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int64_t>(i);
  if (rng) std::shuffle(order.begin(), order.end(), *rng);

  const Shape img_shape = ds.samples[0].image.shape();
  const int64_t per = shape_numel(img_shape);
  std::vector<Batch> out;
  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    const int64_t b = std::min<int64_t>(batch_size, static_cast<int64_t>(order.size() - start));
    Shape bs{b};
    bs.insert(bs.end(), img_shape.begin(), img_shape.end());
    Batch batch;
    batch.images = Tensor::zeros(bs);
    batch.onehot = Tensor::zeros({b, ds.num_classes});
    for (int64_t i = 0; i < b; ++i) {
      const auto& s = ds.samples[static_cast<size_t>(order[start + static_cast<size_t>(i)])];
      check_input(s.image.shape() == img_shape, "make_batches: inconsistent image shapes");
      check_input(s.label >= 0 && s.label < ds.num_classes, "make_batches: label out of range");
      std::copy(s.image.data().begin(), s.image.data().end(),
                batch.images.data().begin() + i * per);
      batch.onehot.data()[i * ds.num_classes + s.label] = 1.0f;
      batch.labels.push_back(s.label);
    }
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace dnas
