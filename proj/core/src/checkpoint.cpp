#include <cstring>
#include <fstream>
#include <sstream>

#include "dnas/checkpoint.hpp"

namespace dnas {

namespace {

constexpr const char* kMagic = "dnas-checkpoint";

std::string shape_csv(const Shape& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

Shape parse_shape_csv(const std::string& s, const std::string& where) {
  Shape shape;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    try {
      shape.push_back(std::stoll(s.substr(pos, comma - pos)));
    } catch (const std::logic_error&) {
      throw InvalidInput(where + ": bad shape '" + s + "'");
    }
    pos = comma + 1;
  }
  check_input(!shape.empty(), where + ": empty shape");
  return shape;
}

void write_floats(std::ofstream& out, const float* data, size_t n) {
  // Storage is little-endian; this targets little-endian hosts directly.
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

}  // namespace

const Tensor* Checkpoint::find_param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return &p.tensor;
  return nullptr;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream manifest(path);
  check_input(manifest.good(), "checkpoint: cannot write " + path);
  std::ofstream blob(path + ".blob", std::ios::binary);
  check_input(blob.good(), "checkpoint: cannot write " + path + ".blob");

  manifest << "format " << kMagic << "\n";
  manifest << "version " << Checkpoint::kVersion << "\n";
  manifest << "kind " << ck.kind << "\n";
  manifest << "epoch " << ck.epoch << "\n";
  for (const auto& [k, v] : ck.meta) manifest << "meta " << k << " " << v << "\n";
  if (!ck.arch_text.empty()) {
    manifest << "arch_begin\n" << ck.arch_text;
    if (ck.arch_text.back() != '\n') manifest << "\n";
    manifest << "arch_end\n";
  }
  if (!ck.rng_state.empty()) manifest << "rng " << ck.rng_state << "\n";

  int64_t offset = 0;
  auto emit = [&](const char* tag, const std::string& name, const Shape& shape,
                  const float* data, int64_t numel) {
    manifest << tag << " " << name << " " << shape_csv(shape) << " " << offset << " " << numel
             << "\n";
    write_floats(blob, data, static_cast<size_t>(numel));
    offset += numel;
  };
  for (const auto& p : ck.params)
    emit("param", p.name, p.tensor.shape(), p.tensor.data().data(), p.tensor.numel());
  for (const auto& b : ck.buffers)
    emit("buffer", b.name, b.tensor.shape(), b.tensor.data().data(), b.tensor.numel());
  for (const auto& [name, vel] : ck.opt_state)
    emit("opt", name, Shape{static_cast<int64_t>(vel.size())}, vel.data(),
         static_cast<int64_t>(vel.size()));
  check_input(manifest.good() && blob.good(), "checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream manifest(path);
  check_input(manifest.good(), "checkpoint: cannot open " + path);
  std::ifstream blob(path + ".blob", std::ios::binary);
  check_input(blob.good(), "checkpoint: cannot open " + path + ".blob");
  blob.seekg(0, std::ios::end);
  const int64_t blob_floats = static_cast<int64_t>(blob.tellg()) / 4;

  Checkpoint ck;
  std::string line;
  bool in_arch = false;
  bool magic_seen = false;
  struct Entry {
    std::string tag, name;
    Shape shape;
    int64_t offset, numel;
  };
  std::vector<Entry> entries;

  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (in_arch) {
      if (line == "arch_end") {
        in_arch = false;
      } else {
        ck.arch_text += line + "\n";
      }
      continue;
    }
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "format") {
      std::string magic;
      is >> magic;
      check_input(magic == kMagic, where + ": not a checkpoint manifest");
      magic_seen = true;
    } else if (tag == "version") {
      int64_t v = -1;
      is >> v;
      check_input(v == Checkpoint::kVersion,
                  where + ": unsupported checkpoint version " + std::to_string(v));
    } else if (tag == "kind") {
      is >> ck.kind;
    } else if (tag == "epoch") {
      is >> ck.epoch;
    } else if (tag == "meta") {
      std::string k, v;
      is >> k;
      std::getline(is, v);
      if (!v.empty() && v[0] == ' ') v.erase(0, 1);
      ck.meta[k] = v;
    } else if (tag == "rng") {
      std::getline(is, ck.rng_state);
      if (!ck.rng_state.empty() && ck.rng_state[0] == ' ') ck.rng_state.erase(0, 1);
    } else if (tag == "arch_begin") {
      in_arch = true;
    } else if (tag == "param" || tag == "buffer" || tag == "opt") {
      Entry e;
      e.tag = tag;
      std::string shape;
      is >> e.name >> shape >> e.offset >> e.numel;
      check_input(!is.fail(), where + ": malformed tensor entry");
      e.shape = parse_shape_csv(shape, where);
      check_input(shape_numel(e.shape) == e.numel, where + ": shape/length mismatch");
      check_input(e.offset >= 0 && e.offset + e.numel <= blob_floats,
                  where + ": entry exceeds blob size (corrupted checkpoint " + path + ")");
      entries.push_back(std::move(e));
    } else {
      throw InvalidInput(where + ": unknown manifest tag '" + tag + "'");
    }
  }
  check_input(magic_seen, path + ": not a checkpoint manifest");
  check_input(!in_arch, path + ": unterminated arch block");
  int64_t expected = 0;
  for (const auto& e : entries) expected += e.numel;
  check_input(expected == blob_floats, path + ": blob size " + std::to_string(blob_floats) +
                                           " floats, manifest expects " + std::to_string(expected) +
                                           " (corrupted checkpoint)");

  for (const auto& e : entries) {
    std::vector<float> data(static_cast<size_t>(e.numel));
    blob.seekg(e.offset * 4, std::ios::beg);
    blob.read(reinterpret_cast<char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    check_input(blob.gcount() == static_cast<std::streamsize>(data.size() * sizeof(float)),
                path + ": truncated blob while reading " + e.name);
    if (e.tag == "opt") {
      ck.opt_state.emplace_back(e.name, std::move(data));
    } else {
      NamedTensor nt{e.name, Tensor::from_data(e.shape, std::move(data))};
      (e.tag == "param" ? ck.params : ck.buffers).push_back(std::move(nt));
    }
  }
  return ck;
}

// ---- model snapshots -------------------------------------------------------------

Checkpoint snapshot_teacher(TeacherNet& teacher, const std::string& backbone_descriptor,
                            int64_t epoch) {
  Checkpoint ck;
  ck.kind = "teacher";
  ck.epoch = epoch;
  ck.meta["backbone"] = backbone_descriptor;
  ck.meta["descriptor_len"] = std::to_string(teacher.descriptor_len());
  ck.meta["classes"] = std::to_string(teacher.num_classes());
  teacher.collect(ck.params, ck.buffers);
  return ck;
}

Checkpoint snapshot_student(StudentNet& student, int64_t epoch) {
  Checkpoint ck;
  ck.kind = "student";
  ck.epoch = epoch;
  ck.arch_text = print_architecture(student.arch);
  student.collect(ck.params, ck.buffers);
  return ck;
}

Checkpoint snapshot_supernet(SuperNet& supernet, int64_t epoch) {
  Checkpoint ck;
  ck.kind = "supernet";
  ck.epoch = epoch;
  ck.meta["classes"] = std::to_string(supernet.num_classes);
  ck.meta["in_channels"] = std::to_string(supernet.input_channels);
  supernet.collect(ck.params, ck.buffers);
  return ck;
}

Checkpoint snapshot_mixweights(const MixWeights& weights) {
  Checkpoint ck;
  ck.kind = "mixweights";
  for (size_t b = 0; b < weights.alpha_hat.size(); ++b) {
    const std::string bp = "block" + std::to_string(b + 1);
    ck.params.push_back(
        {bp + ".alpha_hat",
         Tensor::from_data({static_cast<int64_t>(weights.alpha_hat[b].size())},
                           std::vector<float>(weights.alpha_hat[b]))});
    ck.params.push_back(
        {bp + ".beta_hat",
         Tensor::from_data({2}, {weights.beta_hat[b][0], weights.beta_hat[b][1]})});
  }
  return ck;
}

namespace {

void load_into(const Checkpoint& ck, NamedTensors& params, NamedTensors& buffers,
               const std::string& what) {
  auto apply = [&](const NamedTensors& src, NamedTensors& dst, const char* tag) {
    check_input(src.size() == dst.size(),
                what + ": checkpoint has " + std::to_string(src.size()) + " " + tag +
                    " entries, model expects " + std::to_string(dst.size()));
    for (size_t i = 0; i < dst.size(); ++i) {
      const Tensor* found = nullptr;
      for (const auto& s : src)
        if (s.name == dst[i].name) {
          found = &s.tensor;
          break;
        }
      check_input(found != nullptr, what + ": checkpoint is missing tensor " + dst[i].name);
      check_input(found->shape() == dst[i].tensor.shape(),
                  what + ": shape mismatch for " + dst[i].name + ": checkpoint " +
                      shape_str(found->shape()) + ", model " + shape_str(dst[i].tensor.shape()));
      std::copy(found->data().begin(), found->data().end(), dst[i].tensor.data().begin());
    }
  };
  apply(ck.params, params, "param");
  apply(ck.buffers, buffers, "buffer");
}

std::string require_meta(const Checkpoint& ck, const std::string& key, const std::string& what) {
  auto it = ck.meta.find(key);
  check_input(it != ck.meta.end(), what + ": checkpoint is missing meta key '" + key + "'");
  return it->second;
}

}  // namespace

TeacherNet restore_teacher(const Checkpoint& ck) {
  check_input(ck.kind == "teacher", "restore_teacher: checkpoint kind is '" + ck.kind + "'");
  const auto backbone = PlainBackboneConfig::from_string(require_meta(ck, "backbone", "teacher"));
  TeacherConfig cfg;
  cfg.descriptor_len = std::stoll(require_meta(ck, "descriptor_len", "teacher"));
  cfg.num_classes = std::stoll(require_meta(ck, "classes", "teacher"));
  std::mt19937 rng(0);  // weights are overwritten below
  TeacherNet net = build_teacher(backbone, cfg, rng);
  NamedTensors params, buffers;
  net.collect(params, buffers);
  load_into(ck, params, buffers, "restore_teacher");
  return net;
}

StudentNet restore_student(const Checkpoint& ck) {
  check_input(ck.kind == "student", "restore_student: checkpoint kind is '" + ck.kind + "'");
  check_input(!ck.arch_text.empty(), "restore_student: checkpoint has no architecture block");
  std::mt19937 rng(0);
  StudentNet net(parse_architecture(ck.arch_text), rng);
  NamedTensors params, buffers;
  net.collect(params, buffers);
  load_into(ck, params, buffers, "restore_student");
  return net;
}

SuperNet restore_supernet(const Checkpoint& ck) {
  check_input(ck.kind == "supernet", "restore_supernet: checkpoint kind is '" + ck.kind + "'");
  std::mt19937 rng(0);
  SuperNet net(reference_candidate_space(), std::stoll(require_meta(ck, "classes", "supernet")),
               std::stoll(require_meta(ck, "in_channels", "supernet")), rng);
  NamedTensors params, buffers;
  net.collect(params, buffers);
  load_into(ck, params, buffers, "restore_supernet");
  return net;
}

MixWeights restore_mixweights(const Checkpoint& ck) {
  check_input(ck.kind == "mixweights" || ck.kind == "supernet",
              "restore_mixweights: checkpoint kind is '" + ck.kind + "'");
  MixWeights w;
  for (int64_t b = 1;; ++b) {
    const Tensor* alpha = ck.find_param("block" + std::to_string(b) + ".alpha_hat");
    const Tensor* beta = ck.find_param("block" + std::to_string(b) + ".beta_hat");
    if (!alpha && !beta) break;
    check_input(alpha && beta, "restore_mixweights: incomplete block " + std::to_string(b));
    check_input(beta->numel() == 2, "restore_mixweights: beta_hat must have 2 entries");
    w.alpha_hat.emplace_back(alpha->data().begin(), alpha->data().end());
    w.beta_hat.push_back({beta->data()[0], beta->data()[1]});
  }
  check_input(!w.alpha_hat.empty(), "restore_mixweights: no mix weights in checkpoint");
  return w;
}

}  // namespace dnas
