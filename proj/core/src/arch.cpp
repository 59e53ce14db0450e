#include <cmath>
#include <sstream>

#include "dnas/arch.hpp"

namespace dnas {

const char* pool_name(PoolKind k) { return k == PoolKind::average ? "avg" : "max"; }

int64_t PyConvSpec::out_channels() const {
  int64_t total = 0;
  for (const auto& l : levels) total += l.out_channels;
  return total;
}

void validate_architecture(const ArchitectureSpec& arch) {
  check_input(arch.blocks.size() == 4,
              "architecture must have exactly 4 blocks, got " + std::to_string(arch.blocks.size()));
  check_input(arch.num_classes >= 2, "architecture needs at least 2 classes");
  check_input(arch.input_channels >= 1, "architecture needs at least 1 input channel");
  for (size_t b = 0; b < arch.blocks.size(); ++b) {
    const auto& blk = arch.blocks[b];
    check_input(!blk.pyconv.levels.empty(),
                "block " + std::to_string(b + 1) + " has an empty pyconv");
    for (const auto& l : blk.pyconv.levels) {
      check_input(l.kernel >= 1 && l.kernel % 2 == 1,
                  "block " + std::to_string(b + 1) + ": kernel size must be odd and positive, got " +
                      std::to_string(l.kernel));
      check_input(l.out_channels >= 1 && l.groups >= 1,
                  "block " + std::to_string(b + 1) + ": channels and groups must be positive");
      check_input(l.out_channels % l.groups == 0,
                  "block " + std::to_string(b + 1) + ": groups must divide level out channels");
    }
  }
}

void CandidateSpace::validate() const {
  check_input(conv_candidates.size() == 4, "candidate space must cover 4 blocks");
  for (size_t b = 0; b < conv_candidates.size(); ++b) {
    check_input(!conv_candidates[b].empty(), "block " + std::to_string(b + 1) + " has no candidates");
    const int64_t total = conv_candidates[b][0].out_channels();
    for (const auto& cand : conv_candidates[b]) {
      check_input(cand.out_channels() == total,
                  "block " + std::to_string(b + 1) +
                      ": all candidates must produce the same output channels");
    }
  }
}

MixWeights MixWeights::ones_like(const CandidateSpace& space) {
  MixWeights w;
  for (const auto& cands : space.conv_candidates) {
    w.alpha_hat.emplace_back(cands.size(), 1.0f);
    w.beta_hat.push_back({1.0f, 1.0f});
  }
  return w;
}

namespace {
std::vector<double> softmax_vec(const std::vector<double>& logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double denom = 0.0;
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) denom += std::exp(logits[i] - mx);
  for (size_t i = 0; i < logits.size(); ++i) out[i] = std::exp(logits[i] - mx) / denom;
  return out;
}
}  // namespace

std::vector<double> MixWeights::alpha_probs(int64_t block) const {
  const auto& a = alpha_hat[static_cast<size_t>(block)];
  std::vector<double> logits(a.begin(), a.end());
  return softmax_vec(logits);
}

std::array<double, 2> MixWeights::beta_probs(int64_t block) const {
  const auto& b = beta_hat[static_cast<size_t>(block)];
  auto p = softmax_vec({static_cast<double>(b[0]), static_cast<double>(b[1])});
  return {p[0], p[1]};
}

Derivation derive_architecture(const CandidateSpace& space, const MixWeights& weights,
                               int64_t num_classes, int64_t input_channels) {
  space.validate();
  check_input(weights.alpha_hat.size() == space.conv_candidates.size() &&
                  weights.beta_hat.size() == space.conv_candidates.size(),
              "derive: mix weights do not match candidate space block count");
  Derivation d;
  d.arch.num_classes = num_classes;
  d.arch.input_channels = input_channels;
  d.arch.dim = Dimensionality::d2;
  for (int64_t b = 0; b < space.num_blocks(); ++b) {
    const auto& cands = space.conv_candidates[static_cast<size_t>(b)];
    check_input(weights.alpha_hat[static_cast<size_t>(b)].size() == cands.size(),
                "derive: block " + std::to_string(b + 1) + " candidate count mismatch");
    for (float v : weights.alpha_hat[static_cast<size_t>(b)])
      check_input(std::isfinite(v), "derive: mix weights must be finite");
    const auto alpha = weights.alpha_probs(b);
    size_t best = 0;
    for (size_t m = 1; m < alpha.size(); ++m)
      if (alpha[m] > alpha[best]) best = m;  // ties keep the lowest index
    const auto beta = weights.beta_probs(b);
    const PoolKind pool = beta[1] > beta[0] ? PoolKind::max : PoolKind::average;
    d.arch.blocks.push_back({cands[best], pool});
    d.conv_choice.push_back(static_cast<int64_t>(best));
    d.pool_choice.push_back(pool);
  }
  validate_architecture(d.arch);
  return d;
}

ArchitectureSpec extend_to_3d(const ArchitectureSpec& arch) {
  check_input(arch.dim == Dimensionality::d2, "extend_to_3d: architecture is already 3-D");
  validate_architecture(arch);
  ArchitectureSpec out = arch;
  out.dim = Dimensionality::d3;
  return out;
}

CandidateSpace reference_candidate_space() {
  auto py = [](std::initializer_list<FilterSpec> levels) {
    return PyConvSpec{std::vector<FilterSpec>(levels)};
  };
  CandidateSpace s;
  s.conv_candidates = {
      // Block 1: an 11x11 level paired with a shrinking second level.
      {
          py({{11, 16, 1}, {7, 16, 1}}),
          py({{11, 16, 1}, {5, 16, 1}}),
          py({{11, 16, 1}, {3, 16, 1}}),
          py({{11, 16, 1}, {1, 16, 1}}),
      },
      // Block 2: 9x9 level plus {5,3,1} x groups {1,2,4}.
      {
          py({{9, 32, 1}, {5, 32, 1}}),
          py({{9, 32, 1}, {5, 32, 2}}),
          py({{9, 32, 1}, {5, 32, 4}}),
          py({{9, 32, 1}, {3, 32, 1}}),
          py({{9, 32, 1}, {3, 32, 2}}),
          py({{9, 32, 1}, {3, 32, 4}}),
          py({{9, 32, 1}, {1, 32, 1}}),
          py({{9, 32, 1}, {1, 32, 2}}),
          py({{9, 32, 1}, {1, 32, 4}}),
      },
      // Block 3: 5x5 level plus {3,1} x groups {1,2,4}.
      {
          py({{5, 64, 1}, {3, 64, 1}}),
          py({{5, 64, 1}, {3, 64, 2}}),
          py({{5, 64, 1}, {3, 64, 4}}),
          py({{5, 64, 1}, {1, 64, 1}}),
          py({{5, 64, 1}, {1, 64, 2}}),
          py({{5, 64, 1}, {1, 64, 4}}),
      },
      // Block 4: 3x3 level plus 1x1 x groups {1,2,4}.
      {
          py({{3, 128, 1}, {1, 128, 1}}),
          py({{3, 128, 1}, {1, 128, 2}}),
          py({{3, 128, 1}, {1, 128, 4}}),
      },
  };
  s.validate();
  return s;
}

ArchitectureSpec reference_student(int64_t num_classes, int64_t input_channels) {
  ArchitectureSpec arch;
  arch.num_classes = num_classes;
  arch.input_channels = input_channels;
  arch.dim = Dimensionality::d2;
  arch.blocks = {
      {PyConvSpec{{{11, 16, 1}, {3, 16, 1}}}, PoolKind::max},
      {PyConvSpec{{{9, 32, 1}, {5, 32, 1}}}, PoolKind::max},
      {PyConvSpec{{{5, 64, 1}, {3, 64, 1}}}, PoolKind::max},
      {PyConvSpec{{{3, 128, 1}, {1, 128, 1}}}, PoolKind::max},
  };
  validate_architecture(arch);
  return arch;
}

std::string print_architecture(const ArchitectureSpec& arch) {
  std::ostringstream os;
  os << "dim: " << (arch.dim == Dimensionality::d2 ? 2 : 3) << "\n";
  os << "in_channels: " << arch.input_channels << "\n";
  os << "classes: " << arch.num_classes << "\n";
  for (size_t b = 0; b < arch.blocks.size(); ++b) {
    os << "block" << (b + 1) << ": pyconv[";
    const auto& levels = arch.blocks[b].pyconv.levels;
    for (size_t l = 0; l < levels.size(); ++l) {
      if (l) os << ',';
      os << '(' << levels[l].kernel << ',' << levels[l].out_channels << ',' << levels[l].groups
         << ')';
    }
    os << "] pool=" << pool_name(arch.blocks[b].pool) << "\n";
  }
  return os.str();
}

namespace {

std::string strip(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int64_t parse_int(const std::string& s, const std::string& what) {
  try {
    size_t pos = 0;
    int64_t v = std::stoll(strip(s), &pos);
    check_input(pos == strip(s).size(), "trailing characters in " + what + ": '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidInput("cannot parse " + what + ": '" + s + "'");
  }
}

}  // namespace

ArchitectureSpec parse_architecture(const std::string& text) {
  ArchitectureSpec arch;
  arch.blocks.clear();
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = "architecture line " + std::to_string(lineno);
    std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    const size_t colon = s.find(':');
    check_input(colon != std::string::npos, where + ": expected 'key: value'");
    const std::string key = strip(s.substr(0, colon));
    const std::string value = strip(s.substr(colon + 1));
    if (key == "dim") {
      const int64_t d = parse_int(value, where);
      check_input(d == 2 || d == 3, where + ": dim must be 2 or 3");
      arch.dim = d == 2 ? Dimensionality::d2 : Dimensionality::d3;
    } else if (key == "in_channels") {
      arch.input_channels = parse_int(value, where);
    } else if (key == "classes") {
      arch.num_classes = parse_int(value, where);
    } else if (key.rfind("block", 0) == 0) {
      const int64_t idx = parse_int(key.substr(5), where + " block index");
      check_input(idx == static_cast<int64_t>(arch.blocks.size()) + 1,
                  where + ": blocks must appear in order block1..block4");
      const size_t lb = value.find("pyconv[");
      const size_t rb = value.find(']');
      check_input(lb == 0 && rb != std::string::npos, where + ": expected pyconv[(k,c,g),...]");
      BlockSpec blk;
      std::string body = value.substr(7, rb - 7);
      size_t pos = 0;
      while (pos < body.size()) {
        const size_t lp = body.find('(', pos);
        if (lp == std::string::npos) break;
        const size_t rp = body.find(')', lp);
        check_input(rp != std::string::npos, where + ": unbalanced parentheses");
        std::string triple = body.substr(lp + 1, rp - lp - 1);
        const size_t c1 = triple.find(',');
        const size_t c2 = triple.find(',', c1 + 1);
        check_input(c1 != std::string::npos && c2 != std::string::npos,
                    where + ": level must be (kernel,channels,groups)");
        FilterSpec f;
        f.kernel = parse_int(triple.substr(0, c1), where + " kernel");
        f.out_channels = parse_int(triple.substr(c1 + 1, c2 - c1 - 1), where + " channels");
        f.groups = parse_int(triple.substr(c2 + 1), where + " groups");
        blk.pyconv.levels.push_back(f);
        pos = rp + 1;
      }
      const size_t pe = value.find("pool=", rb);
      check_input(pe != std::string::npos, where + ": missing pool=avg|max");
      const std::string pool = strip(value.substr(pe + 5));
      if (pool == "avg") {
        blk.pool = PoolKind::average;
      } else if (pool == "max") {
        blk.pool = PoolKind::max;
      } else {
        throw InvalidInput(where + ": pool must be avg or max, got '" + pool + "'");
      }
      arch.blocks.push_back(std::move(blk));
    } else {
      throw InvalidInput(where + ": unknown key '" + key + "'");
    }
  }
  validate_architecture(arch);
  return arch;
}

}  // namespace dnas
