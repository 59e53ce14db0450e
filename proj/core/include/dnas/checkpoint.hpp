#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dnas/layers.hpp"

namespace dnas {

// On disk a checkpoint is a diffable text manifest at `path` plus raw
// little-endian float32 blobs at `path`.blob. The manifest lists format
// version, kind, epoch, free-form metadata, an optional architecture
// block, and one line per tensor (name, shape, blob offset, length).
struct Checkpoint {
  static constexpr int64_t kVersion = 1;

  std::string kind;  // teacher | student | supernet | mixweights
  int64_t epoch = 0;
  std::map<std::string, std::string> meta;
  std::string arch_text;  // architecture grammar, optional
  NamedTensors params;
  NamedTensors buffers;
  // Optimizer momentum, keyed by parameter name.
  std::vector<std::pair<std::string, std::vector<float>>> opt_state;
  std::string rng_state;

  const Tensor* find_param(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
// Throws InvalidInput naming the path on malformed manifests, version
// mismatches, or blob size mismatches.
Checkpoint load_checkpoint(const std::string& path);

// ---- model snapshots -----------------------------------------------------------

Checkpoint snapshot_teacher(TeacherNet& teacher, const std::string& backbone_descriptor,
                            int64_t epoch);
Checkpoint snapshot_student(StudentNet& student, int64_t epoch);
Checkpoint snapshot_supernet(SuperNet& supernet, int64_t epoch);
Checkpoint snapshot_mixweights(const MixWeights& weights);

// Rebuilds the model described by the checkpoint and loads every tensor.
// Mismatched or missing names are rejected.
TeacherNet restore_teacher(const Checkpoint& ck);
StudentNet restore_student(const Checkpoint& ck);
SuperNet restore_supernet(const Checkpoint& ck);
MixWeights restore_mixweights(const Checkpoint& ck);

}  // namespace dnas
