// Command-line front end: data generation, the three training phases,
// architecture derivation, analysis and benchmarking. Each invocation runs
// exactly one phase; `pipeline` chains them with resume-on-artifact.

#include <sys/file.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dnas/analyze.hpp"
#include "dnas/checkpoint.hpp"
#include "dnas/config.hpp"
#include "dnas/data.hpp"
#include "dnas/train.hpp"

namespace fs = std::filesystem;
using namespace dnas;

namespace {

// ---- small utilities -------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  check_input(in.good(), "cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path);
  check_input(out.good(), "cannot write " + path);
  out << content;
  check_input(out.good(), "write failed for " + path);
}

std::vector<int64_t> parse_int_list(const std::string& s, const std::string& what) {
  std::vector<int64_t> out;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    try {
      out.push_back(std::stoll(s.substr(pos, comma - pos)));
    } catch (const std::logic_error&) {
      throw InvalidInput(what + ": cannot parse integer list '" + s + "'");
    }
    pos = comma + 1;
  }
  check_input(!out.empty(), what + ": empty list");
  return out;
}

// Advisory lock: one process owns a checkpoint directory at a time.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) {
    fs::create_directories(dir);
    path_ = (fs::path(dir) / ".lock").string();
    fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
    check_input(fd_ >= 0, "cannot open lock file " + path_);
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fd_ = -1;
      throw InvalidInput("checkpoint directory is locked by another run: " + path_);
    }
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

// ---- resolved per-phase settings --------------------------------------------

struct DataSettings {
  int64_t classes = 8;
  int64_t train_per_class = 200;
  int64_t test_per_class = 100;
  int64_t image_size = 64;
  int64_t background_complexity = 6;
  double cue_size_min = 0.05, cue_size_max = 0.4;
  double illumination_min = 0.5, illumination_max = 1.5;
  int64_t seed = 1;

  SyntheticConfig to_synthetic() const {
    SyntheticConfig cfg;
    cfg.num_classes = classes;
    cfg.train_per_class = train_per_class;
    cfg.test_per_class = test_per_class;
    cfg.image_size = image_size;
    cfg.background_complexity = background_complexity;
    cfg.cue_size_range = {static_cast<float>(cue_size_min), static_cast<float>(cue_size_max)};
    cfg.illumination_range = {static_cast<float>(illumination_min),
                              static_cast<float>(illumination_max)};
    cfg.seed = static_cast<uint64_t>(seed);
    return cfg;
  }

  std::string echo() const {
    std::ostringstream os;
    os << "[data]\n"
       << "classes = " << classes << "\n"
       << "train_per_class = " << train_per_class << "\n"
       << "test_per_class = " << test_per_class << "\n"
       << "image_size = " << image_size << "\n"
       << "background_complexity = " << background_complexity << "\n"
       << "cue_size_min = " << cue_size_min << "\n"
       << "cue_size_max = " << cue_size_max << "\n"
       << "illumination_min = " << illumination_min << "\n"
       << "illumination_max = " << illumination_max << "\n"
       << "seed = " << seed << "\n";
    return os.str();
  }
};

DataSettings read_data_settings(ConfigFile& cfg) {
  DataSettings s;
  s.classes = cfg.get_int("data", "classes", s.classes);
  s.train_per_class = cfg.get_int("data", "train_per_class", s.train_per_class);
  s.test_per_class = cfg.get_int("data", "test_per_class", s.test_per_class);
  s.image_size = cfg.get_int("data", "image_size", s.image_size);
  s.background_complexity = cfg.get_int("data", "background_complexity", s.background_complexity);
  s.cue_size_min = cfg.get_double("data", "cue_size_min", s.cue_size_min);
  s.cue_size_max = cfg.get_double("data", "cue_size_max", s.cue_size_max);
  s.illumination_min = cfg.get_double("data", "illumination_min", s.illumination_min);
  s.illumination_max = cfg.get_double("data", "illumination_max", s.illumination_max);
  s.seed = cfg.get_int("data", "seed", s.seed);
  return s;
}

struct TeacherSettings {
  int64_t descriptor_len = 128;
  std::string backbone_channels = "64,128,256";

  PlainBackboneConfig backbone(int64_t in_channels) const {
    PlainBackboneConfig bb;
    bb.in_channels = in_channels;
    bb.channels = parse_int_list(backbone_channels, "backbone_channels");
    return bb;
  }

  std::string echo() const {
    std::ostringstream os;
    os << "[teacher]\n"
       << "descriptor_len = " << descriptor_len << "\n"
       << "backbone_channels = " << backbone_channels << "\n";
    return os.str();
  }
};

TeacherSettings read_teacher_settings(ConfigFile& cfg) {
  TeacherSettings s;
  s.descriptor_len = cfg.get_int("teacher", "descriptor_len", s.descriptor_len);
  s.backbone_channels = cfg.get_str("teacher", "backbone_channels", s.backbone_channels);
  return s;
}

struct PhaseTrainSettings {
  TrainConfig train;
  int64_t checkpoint_interval = 0;  // epochs; 0 = final only

  std::string echo(const std::string& section) const {
    std::ostringstream os;
    os << "[" << section << "]\n"
       << "learning_rate = " << train.learning_rate << "\n"
       << "schedule = " << (train.schedule == LrSchedule::cosine ? "cosine" : "plateau") << "\n"
       << "weight_decay = " << train.weight_decay << "\n"
       << "momentum = " << train.momentum << "\n"
       << "batch_size = " << train.batch_size << "\n"
       << "epochs = " << train.epochs << "\n"
       << "lambda = " << train.lambda << "\n"
       << "seed = " << train.seed << "\n"
       << "brightness_min = " << train.brightness_range.first << "\n"
       << "brightness_max = " << train.brightness_range.second << "\n"
       << "mse_on_logits = " << (train.mse_on_logits ? "true" : "false") << "\n"
       << "plateau_patience = " << train.plateau_patience << "\n"
       << "plateau_factor = " << train.plateau_factor << "\n"
       << "checkpoint_interval = " << checkpoint_interval << "\n";
    return os.str();
  }
};

PhaseTrainSettings read_train_settings(ConfigFile& cfg, const std::string& section,
                                       float default_lr, int64_t default_epochs) {
  PhaseTrainSettings s;
  s.train.learning_rate = static_cast<float>(cfg.get_double(section, "learning_rate", default_lr));
  const std::string sched = cfg.get_str(section, "schedule", "cosine");
  if (sched == "cosine") {
    s.train.schedule = LrSchedule::cosine;
  } else if (sched == "plateau") {
    s.train.schedule = LrSchedule::plateau;
  } else {
    throw InvalidInput("[" + section + "] schedule must be cosine or plateau, got '" + sched + "'");
  }
  s.train.weight_decay = static_cast<float>(cfg.get_double(section, "weight_decay", 5e-4));
  s.train.momentum = static_cast<float>(cfg.get_double(section, "momentum", 0.9));
  s.train.batch_size = cfg.get_int(section, "batch_size", 32);
  s.train.epochs = cfg.get_int(section, "epochs", default_epochs);
  s.train.lambda = static_cast<float>(cfg.get_double(section, "lambda", 0.7));
  s.train.seed = static_cast<uint64_t>(cfg.get_int(section, "seed", 1));
  s.train.brightness_range.first =
      static_cast<float>(cfg.get_double(section, "brightness_min", 0.5));
  s.train.brightness_range.second =
      static_cast<float>(cfg.get_double(section, "brightness_max", 1.5));
  s.train.mse_on_logits = cfg.get_bool(section, "mse_on_logits", false);
  s.train.plateau_patience = cfg.get_int(section, "plateau_patience", 10);
  s.train.plateau_factor = static_cast<float>(cfg.get_double(section, "plateau_factor", 0.1));
  s.checkpoint_interval = cfg.get_int(section, "checkpoint_interval", 0);
  return s;
}

struct Paths {
  std::string data_dir = "work/data";
  std::string ckpt_dir = "work/ckpt";
  std::string report_dir = "work/reports";

  std::string echo() const {
    std::ostringstream os;
    os << "[paths]\n"
       << "data_dir = " << data_dir << "\n"
       << "ckpt_dir = " << ckpt_dir << "\n"
       << "report_dir = " << report_dir << "\n";
    return os.str();
  }
};

Paths read_paths(ConfigFile& cfg) {
  Paths p;
  p.data_dir = cfg.get_str("paths", "data_dir", p.data_dir);
  p.ckpt_dir = cfg.get_str("paths", "ckpt_dir", p.ckpt_dir);
  p.report_dir = cfg.get_str("paths", "report_dir", p.report_dir);
  return p;
}

void write_echo(const Paths& paths, const std::string& phase, const std::string& body) {
  write_file((fs::path(paths.report_dir) / (phase + ".config.echo")).string(), body);
}

std::string metrics_lines(const PhaseResult& result) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (const auto& em : result.epochs) {
    os << "epoch=" << em.epoch;
    for (size_t i = 0; i < em.stage_losses.size(); ++i)
      os << " loss" << (i + 1) << "=" << em.stage_losses[i];
    os << " lr=" << em.lr << " acc=" << em.train_accuracy << "\n";
  }
  return os.str();
}

Dataset load_split(const std::string& data_dir, const std::string& split, int64_t image_size) {
  const std::string dir = (fs::path(data_dir) / split).string();
  check_input(fs::is_directory(dir),
              "missing data split '" + dir + "' (run the gen-data phase first)");
  Dataset ds = load_image_directory(dir, image_size);
  ds.split = split;
  return ds;
}

int64_t infer_image_size(const std::string& data_dir) {
  // Peek at one image of the train split.
  const fs::path train = fs::path(data_dir) / "train";
  check_input(fs::is_directory(train),
              "missing data split '" + train.string() + "' (run the gen-data phase first)");
  for (const auto& cls : fs::directory_iterator(train)) {
    if (!cls.is_directory()) continue;
    for (const auto& f : fs::directory_iterator(cls.path())) {
      if (!f.is_regular_file()) continue;
      Tensor img = read_ppm(f.path().string());
      return img.dim(1);
    }
  }
  throw InvalidInput("no images under " + train.string());
}

// Every key any phase may consume; reject_unknown() flags the rest as
// typos while letting one config file feed the whole pipeline.
const std::set<std::string>& all_config_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    for (const char* key : {"classes", "train_per_class", "test_per_class", "image_size",
                            "background_complexity", "cue_size_min", "cue_size_max",
                            "illumination_min", "illumination_max", "seed"})
      k.insert(std::string("data.") + key);
    for (const char* key : {"descriptor_len", "backbone_channels"})
      k.insert(std::string("teacher.") + key);
    for (const char* sec :
         {"train-teacher", "train-plain", "search", "transfer", "train-scratch"}) {
      for (const char* key :
           {"learning_rate", "schedule", "weight_decay", "momentum", "batch_size", "epochs",
            "lambda", "seed", "brightness_min", "brightness_max", "mse_on_logits",
            "plateau_patience", "plateau_factor", "checkpoint_interval"})
        k.insert(std::string(sec) + "." + key);
    }
    k.insert("search.teacher");
    k.insert("transfer.arch");
    k.insert("transfer.teacher");
    k.insert("transfer.init");
    k.insert("train-scratch.arch");
    k.insert("eval.checkpoint");
    k.insert("eval.batch_size");
    for (const char* key : {"data_dir", "ckpt_dir", "report_dir"})
      k.insert(std::string("paths.") + key);
    return k;
  }();
  return keys;
}

// ---- phase implementations ----------------------------------------------------

struct CommonArgs {
  std::string config_path;
  Paths paths;
  bool paths_overridden[3] = {false, false, false};
};

ConfigFile load_config(const CommonArgs& args) {
  if (args.config_path.empty()) return ConfigFile::parse("", "<defaults>");
  return ConfigFile::load(args.config_path);
}

Paths resolve_paths(ConfigFile& cfg, const CommonArgs& args) {
  Paths p = read_paths(cfg);
  if (args.paths_overridden[0]) p.data_dir = args.paths.data_dir;
  if (args.paths_overridden[1]) p.ckpt_dir = args.paths.ckpt_dir;
  if (args.paths_overridden[2]) p.report_dir = args.paths.report_dir;
  return p;
}

int phase_gen_data(const CommonArgs& args) {
  ConfigFile cfg = load_config(args);
  Paths paths = resolve_paths(cfg, args);
  DataSettings ds = read_data_settings(cfg);
  cfg.reject_unknown(all_config_keys());

  auto [train, test] = generate_synthetic(ds.to_synthetic());
  export_dataset(train, (fs::path(paths.data_dir) / "train").string());
  export_dataset(test, (fs::path(paths.data_dir) / "test").string());
  write_file((fs::path(paths.data_dir) / ".complete").string(),
             "train=" + std::to_string(train.samples.size()) +
                 " test=" + std::to_string(test.samples.size()) + "\n");
  write_echo(paths, "gen-data", ds.echo() + paths.echo());
  std::cout << "gen-data: wrote " << train.samples.size() << " train / " << test.samples.size()
            << " test images under " << paths.data_dir << "\n";
  return 0;
}

// mode: progressive teacher or plain end-to-end baseline.
int phase_train_teacher(const CommonArgs& args, bool progressive) {
  ConfigFile cfg = load_config(args);
  Paths paths = resolve_paths(cfg, args);
  const std::string section = progressive ? "train-teacher" : "train-plain";
  TeacherSettings ts = read_teacher_settings(cfg);
  PhaseTrainSettings ps = read_train_settings(cfg, section, 0.002f, 30);
  cfg.reject_unknown(all_config_keys());

  DirLock lock(paths.ckpt_dir);
  const int64_t image_size = infer_image_size(paths.data_dir);
  Dataset train = load_split(paths.data_dir, "train", image_size);

  std::mt19937 rng(static_cast<uint32_t>(ps.train.seed));
  TeacherConfig tc;
  tc.descriptor_len = ts.descriptor_len;
  tc.num_classes = train.num_classes;
  const PlainBackboneConfig bb = ts.backbone(train.channels);
  TeacherNet teacher = build_teacher(bb, tc, rng);

  const std::string ckpt = (fs::path(paths.ckpt_dir) /
                            (progressive ? "teacher.ckpt" : "teacher_plain.ckpt"))
                               .string();
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochMetrics& em) {
    if (ps.checkpoint_interval > 0 && (em.epoch + 1) % ps.checkpoint_interval == 0) {
      save_checkpoint(ckpt + ".epoch" + std::to_string(em.epoch),
                      snapshot_teacher(teacher, bb.to_string(), em.epoch));
    }
  };
  PhaseResult result = progressive ? train_teacher_progressive(teacher, train, ps.train, hooks)
                                   : train_backbone_plain(teacher, train, ps.train, hooks);

  Checkpoint final = snapshot_teacher(teacher, bb.to_string(), ps.train.epochs - 1);
  final.rng_state = std::to_string(ps.train.seed);
  save_checkpoint(ckpt, final);
  write_file((fs::path(paths.report_dir) / (section + ".metrics")).string(),
             metrics_lines(result));
  write_echo(paths, section, ts.echo() + ps.echo(section) + paths.echo());
  std::cout << section << ": " << result.optimizer_steps << " optimizer steps, final train acc "
            << result.epochs.back().train_accuracy << ", wall " << result.wall_seconds << " s\n"
            << "checkpoint: " << ckpt << "\n";
  return 0;
}

int phase_search(const CommonArgs& args, const std::string& teacher_path_flag) {
  ConfigFile cfg = load_config(args);
  Paths paths = resolve_paths(cfg, args);
  PhaseTrainSettings ps = read_train_settings(cfg, "search", 0.002f, 30);
  std::string teacher_path = cfg.get_str("search", "teacher", "");
  cfg.reject_unknown(all_config_keys());
  if (!teacher_path_flag.empty()) teacher_path = teacher_path_flag;
  if (teacher_path.empty())
    teacher_path = (fs::path(paths.ckpt_dir) / "teacher.ckpt").string();

  DirLock lock(paths.ckpt_dir);
  const int64_t image_size = infer_image_size(paths.data_dir);
  check_input(fs::exists(teacher_path),
              "search requires a teacher checkpoint (run train-teacher first): " + teacher_path);
  Dataset train = load_split(paths.data_dir, "train", image_size);

  TeacherNet teacher = restore_teacher(load_checkpoint(teacher_path));
  std::mt19937 rng(static_cast<uint32_t>(ps.train.seed));
  SuperNet supernet(reference_candidate_space(), train.num_classes, train.channels, rng);
  SearchResult result = run_search(supernet, teacher, train, ps.train);

  save_checkpoint((fs::path(paths.ckpt_dir) / "supernet.ckpt").string(),
                  snapshot_supernet(supernet, ps.train.epochs - 1));
  save_checkpoint((fs::path(paths.ckpt_dir) / "mixweights.ckpt").string(),
                  snapshot_mixweights(result.weights));
  write_file((fs::path(paths.report_dir) / "search.metrics").string(),
             metrics_lines(result.phase));
  write_echo(paths, "search", ps.echo("search") + paths.echo());
  std::cout << "search: derived architecture\n" << print_architecture(result.derivation.arch);
  std::cout << "mixweights: " << (fs::path(paths.ckpt_dir) / "mixweights.ckpt").string() << "\n";
  return 0;
}

int phase_derive(const std::string& weights_path, const std::string& out_path, int64_t classes,
                 int64_t in_channels) {
  check_input(fs::exists(weights_path),
              "derive requires a mixweights checkpoint (run search first): " + weights_path);
  const MixWeights w = restore_mixweights(load_checkpoint(weights_path));
  const Derivation d = derive_architecture(reference_candidate_space(), w, classes, in_channels);
  const std::string text = print_architecture(d.arch);
  std::cout << text;
  std::cout << "chosen conv candidates:";
  for (size_t b = 0; b < d.conv_choice.size(); ++b) std::cout << " " << (d.conv_choice[b] + 1);
  std::cout << "\nchosen pooling:";
  for (PoolKind p : d.pool_choice) std::cout << " " << pool_name(p);
  std::cout << "\n";
  if (!out_path.empty()) write_file(out_path, text);
  return 0;
}

int phase_transfer(const CommonArgs& args, const std::string& arch_flag,
                   const std::string& teacher_flag, const std::string& init_mode, bool scratch) {
  ConfigFile cfg = load_config(args);
  Paths paths = resolve_paths(cfg, args);
  const std::string section = scratch ? "train-scratch" : "transfer";
  PhaseTrainSettings ps = read_train_settings(cfg, section, 0.002f, 30);
  std::string arch_path = cfg.get_str(section, "arch", "");
  std::string teacher_path = cfg.get_str(section, "teacher", "");
  std::string init = cfg.get_str(section, "init", "fresh");
  cfg.reject_unknown(all_config_keys());
  if (!arch_flag.empty()) arch_path = arch_flag;
  if (!teacher_flag.empty()) teacher_path = teacher_flag;
  if (!init_mode.empty()) init = init_mode;
  if (scratch) ps.train.lambda = 0.0f;

  if (arch_path.empty()) arch_path = (fs::path(paths.ckpt_dir) / "student.arch").string();
  check_input(fs::exists(arch_path),
              section + " requires an architecture file (run derive first): " + arch_path);

  DirLock lock(paths.ckpt_dir);
  const int64_t image_size = infer_image_size(paths.data_dir);
  Dataset train = load_split(paths.data_dir, "train", image_size);

  ArchitectureSpec arch = parse_architecture(read_file(arch_path));
  arch.num_classes = train.num_classes;
  arch.input_channels = train.channels;

  std::optional<TeacherNet> teacher;
  if (!scratch) {
    if (teacher_path.empty())
      teacher_path = (fs::path(paths.ckpt_dir) / "teacher.ckpt").string();
    check_input(fs::exists(teacher_path),
                "transfer requires a teacher checkpoint (run train-teacher first): " +
                    teacher_path);
    teacher.emplace(restore_teacher(load_checkpoint(teacher_path)));
  }

  std::mt19937 rng(static_cast<uint32_t>(ps.train.seed));
  std::optional<StudentNet> student;
  if (init == "fresh") {
    student.emplace(arch, rng);
  } else if (init == "inherit") {
    const std::string supernet_path = (fs::path(paths.ckpt_dir) / "supernet.ckpt").string();
    check_input(fs::exists(supernet_path),
                "init=inherit requires a supernet checkpoint (run search first): " + supernet_path);
    SuperNet supernet = restore_supernet(load_checkpoint(supernet_path));
    const MixWeights w = supernet.mix_weights();
    const Derivation d =
        derive_architecture(supernet.space, w, supernet.num_classes, supernet.input_channels);
    check_input(d.arch.blocks == arch.blocks,
                "init=inherit: architecture file does not match the supernet derivation");
    student.emplace(inherit_student(supernet, d, rng));
  } else {
    throw InvalidInput("init must be fresh or inherit, got '" + init + "'");
  }

  PhaseResult result =
      run_transfer(*student, teacher ? &*teacher : nullptr, train, ps.train);

  const std::string ckpt =
      (fs::path(paths.ckpt_dir) / (scratch ? "student_scratch.ckpt" : "student.ckpt")).string();
  save_checkpoint(ckpt, snapshot_student(*student, ps.train.epochs - 1));
  write_file((fs::path(paths.report_dir) / (section + ".metrics")).string(),
             metrics_lines(result));
  write_echo(paths, section, ps.echo(section) + paths.echo());
  std::cout << section << ": final train acc " << result.epochs.back().train_accuracy
            << ", wall " << result.wall_seconds << " s\ncheckpoint: " << ckpt << "\n";
  return 0;
}

std::function<Tensor(const Tensor&)> predictor_from_checkpoint(const std::string& path,
                                                               std::optional<TeacherNet>& teacher,
                                                               std::optional<StudentNet>& student) {
  Checkpoint ck = load_checkpoint(path);
  if (ck.kind == "teacher") {
    teacher.emplace(restore_teacher(ck));
    return [&teacher](const Tensor& x) { return teacher->predict(x, false); };
  }
  if (ck.kind == "student") {
    student.emplace(restore_student(ck));
    return [&student](const Tensor& x) { return student->predict(x, false); };
  }
  throw InvalidInput("eval: checkpoint kind '" + ck.kind + "' is not evaluable: " + path);
}

int phase_eval(const CommonArgs& args, const std::string& ckpt_flag, const std::string& split) {
  ConfigFile cfg = load_config(args);
  Paths paths = resolve_paths(cfg, args);
  std::string ckpt_path = cfg.get_str("eval", "checkpoint", "");
  const int64_t batch = cfg.get_int("eval", "batch_size", 32);
  cfg.reject_unknown(all_config_keys());
  if (!ckpt_flag.empty()) ckpt_path = ckpt_flag;
  if (ckpt_path.empty()) ckpt_path = (fs::path(paths.ckpt_dir) / "student.ckpt").string();
  check_input(fs::exists(ckpt_path),
              "eval requires a checkpoint (run transfer or train-teacher first): " + ckpt_path);

  const int64_t image_size = infer_image_size(paths.data_dir);
  Dataset data = load_split(paths.data_dir, split, image_size);

  std::optional<TeacherNet> teacher;
  std::optional<StudentNet> student;
  auto predict = predictor_from_checkpoint(ckpt_path, teacher, student);
  MetricsReport rep = evaluate(predict, data, batch);

  write_file((fs::path(paths.report_dir) / "eval.metrics").string(), rep.to_records());
  write_file((fs::path(paths.report_dir) / "eval.summary.txt").string(), rep.to_text());
  write_echo(paths, "eval",
             "[eval]\ncheckpoint = " + ckpt_path + "\nbatch_size = " + std::to_string(batch) +
                 "\nsplit = " + split + "\n" + paths.echo());
  std::cout << rep.to_text();
  return 0;
}

ArchitectureSpec load_arch_for_analysis(const std::string& arch_path, int64_t classes_override) {
  ArchitectureSpec arch = parse_architecture(read_file(arch_path));
  if (classes_override > 0) arch.num_classes = classes_override;
  return arch;
}

int phase_analyze(const std::string& arch_path, int64_t classes, const std::string& input,
                  bool include_aux, bool flops_2x) {
  const ArchitectureSpec arch = load_arch_for_analysis(arch_path, classes);
  CountReport params = count_params(arch);
  std::cout << "parameter report for " << arch_path << " (classes=" << arch.num_classes << ")\n";
  if (!input.empty()) {
    MacOptions opts;
    opts.include_aux = include_aux;
    opts.flops_2x = flops_2x;
    std::vector<int64_t> spatial = parse_int_list(input, "--input");
    CountReport macs = count_macs(arch, spatial, opts);
    std::cout << macs.to_table();
    std::cout << "records:\n" << macs.to_records();
  } else {
    std::cout << params.to_table();
    std::cout << "records:\n" << params.to_records();
  }
  std::cout << "total parameters: " << params.total_params << " (" << params.params_pretty()
            << ")\n";
  return 0;
}

int phase_bench(const std::string& arch_path, int64_t classes, const std::string& input,
                int64_t batch, int64_t repeats) {
  const ArchitectureSpec arch = load_arch_for_analysis(arch_path, classes);
  std::vector<int64_t> dims = parse_int_list(input, "--input");
  const int nd = arch.dim == Dimensionality::d2 ? 2 : 3;
  check_input(static_cast<int>(dims.size()) == nd + 1,
              "--input must be channels plus " + std::to_string(nd) + " spatial extents");
  std::mt19937 rng(1);
  StudentNet net(arch, rng);
  Shape in_shape(dims.begin(), dims.end());
  LatencyStats st = benchmark_latency([&](const Tensor& x) { return net.predict(x, false); },
                                      in_shape, batch, repeats);
  std::cout << "latency over " << st.repeats << " runs (batch " << batch << "): median "
            << st.median_ms << " ms, IQR " << st.iqr_ms << " ms, min " << st.min_ms
            << " ms, mean " << st.mean_ms << " ms, throughput " << st.images_per_s
            << " images/s\n";
  return 0;
}

int phase_extend3d(const std::string& arch_path, const std::string& out_path) {
  const ArchitectureSpec arch = parse_architecture(read_file(arch_path));
  const ArchitectureSpec arch3d = extend_to_3d(arch);
  const std::string text = print_architecture(arch3d);
  std::cout << text;
  if (!out_path.empty()) write_file(out_path, text);
  return 0;
}

int phase_pipeline(const CommonArgs& args) {
  ConfigFile probe = load_config(args);
  Paths paths = resolve_paths(probe, args);

  struct Phase {
    const char* name;
    std::vector<std::string> artifacts;
    std::function<int()> run;
  };
  const std::string data_marker = (fs::path(paths.data_dir) / ".complete").string();
  const std::string teacher_ckpt = (fs::path(paths.ckpt_dir) / "teacher.ckpt").string();
  const std::string mixweights = (fs::path(paths.ckpt_dir) / "mixweights.ckpt").string();
  const std::string supernet = (fs::path(paths.ckpt_dir) / "supernet.ckpt").string();
  const std::string arch_file = (fs::path(paths.ckpt_dir) / "student.arch").string();
  const std::string student_ckpt = (fs::path(paths.ckpt_dir) / "student.ckpt").string();
  const std::string eval_report = (fs::path(paths.report_dir) / "eval.metrics").string();

  std::vector<Phase> phases;
  phases.push_back({"gen-data", {data_marker}, [&] { return phase_gen_data(args); }});
  phases.push_back(
      {"train-teacher", {teacher_ckpt}, [&] { return phase_train_teacher(args, true); }});
  phases.push_back({"search", {mixweights, supernet}, [&] { return phase_search(args, ""); }});
  phases.push_back({"derive", {arch_file}, [&] {
                      // Only the derive-relevant key is read here; the full
                      // config is validated by the phases that consume it.
                      ConfigFile cfg = load_config(args);
                      const int64_t classes = cfg.get_int("data", "classes", 8);
                      return phase_derive(mixweights, arch_file, classes, 3);
                    }});
  phases.push_back({"transfer", {student_ckpt}, [&] { return phase_transfer(args, "", "", "", false); }});
  phases.push_back({"eval", {eval_report}, [&] { return phase_eval(args, "", "test"); }});

  for (auto& phase : phases) {
    bool done = true;
    for (const auto& artifact : phase.artifacts)
      done = done && fs::exists(artifact);
    if (done) {
      std::cout << "pipeline: skipping " << phase.name << " (artifacts present)\n";
      continue;
    }
    std::cout << "pipeline: running " << phase.name << "\n";
    try {
      const int rc = phase.run();
      if (rc != 0) {
        std::cerr << "pipeline: phase '" << phase.name << "' failed with exit code " << rc << "\n";
        return rc;
      }
    } catch (const std::exception& e) {
      std::cerr << "pipeline: phase '" << phase.name << "' failed: " << e.what() << "\n";
      throw;
    }
  }
  std::cout << "pipeline: complete; final report at " << eval_report << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distillation-guided architecture search over pyramidal convolutions"};
  app.require_subcommand(1);

  CommonArgs common;
  auto add_common = [&](CLI::App* sub, bool with_paths = true) {
    sub->add_option("-c,--config", common.config_path, "key = value config file");
    if (with_paths) {
      sub->add_option_function<std::string>(
          "--data-dir", [&](const std::string& v) {
            common.paths.data_dir = v;
            common.paths_overridden[0] = true;
          },
          "dataset root (class-per-subdirectory)");
      sub->add_option_function<std::string>(
          "--ckpt-dir", [&](const std::string& v) {
            common.paths.ckpt_dir = v;
            common.paths_overridden[1] = true;
          },
          "checkpoint directory");
      sub->add_option_function<std::string>(
          "--report-dir", [&](const std::string& v) {
            common.paths.report_dir = v;
            common.paths_overridden[2] = true;
          },
          "metrics/report directory");
    }
  };

  auto* gen = app.add_subcommand("gen-data", "render the synthetic cabin dataset");
  add_common(gen);

  auto* tt = app.add_subcommand("train-teacher", "progressively train the teacher");
  add_common(tt);
  bool plain = false;
  tt->add_flag("--plain", plain, "plain end-to-end baseline instead of progressive stages");

  auto* se = app.add_subcommand("search", "distillation-guided architecture search");
  add_common(se);
  std::string teacher_flag;
  se->add_option("--teacher", teacher_flag, "teacher checkpoint path");

  auto* de = app.add_subcommand("derive", "derive the student architecture from mix weights");
  std::string weights_path, derive_out;
  int64_t derive_classes = 10, derive_in_channels = 3;
  de->add_option("--weights", weights_path, "mixweights checkpoint")->required();
  de->add_option("--out", derive_out, "write the architecture file here");
  de->add_option("--classes", derive_classes, "class count for the derived spec");
  de->add_option("--in-channels", derive_in_channels, "input channels for the derived spec");

  auto* tr = app.add_subcommand("transfer", "knowledge transfer into the student");
  add_common(tr);
  std::string arch_flag, transfer_teacher, init_mode;
  tr->add_option("--arch", arch_flag, "architecture file");
  tr->add_option("--teacher", transfer_teacher, "teacher checkpoint path");
  tr->add_option("--init", init_mode, "fresh | inherit");

  auto* sc = app.add_subcommand("train-scratch", "supervised student baseline (lambda = 0)");
  add_common(sc);
  std::string scratch_arch;
  sc->add_option("--arch", scratch_arch, "architecture file");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a data split");
  add_common(ev);
  std::string eval_ckpt, eval_split = "test";
  ev->add_option("--checkpoint", eval_ckpt, "teacher or student checkpoint");
  ev->add_option("--split", eval_split, "train | test");

  auto* an = app.add_subcommand("analyze", "parameter and MAC accounting for an architecture");
  std::string an_arch, an_input;
  int64_t an_classes = 0;
  bool include_aux = false;
  std::string flops_mode = "mac";
  an->add_option("--arch", an_arch, "architecture file")->required();
  an->add_option("--classes", an_classes, "override the class count");
  an->add_option("--input", an_input, "spatial extents, e.g. 224,224 (enables MAC counting)");
  an->add_flag("--include-aux", include_aux, "count BN/pool/activation ops too");
  an->add_option("--flops", flops_mode, "mac (1 MAC = 1 FLOP) or 2x");

  auto* be = app.add_subcommand("bench", "forward latency of an instantiated architecture");
  std::string be_arch, be_input = "3,224,224";
  int64_t be_classes = 0, be_batch = 1, be_repeats = 20;
  be->add_option("--arch", be_arch, "architecture file")->required();
  be->add_option("--classes", be_classes, "override the class count");
  be->add_option("--input", be_input, "channels,spatial..., e.g. 3,224,224");
  be->add_option("--batch", be_batch, "batch size");
  be->add_option("--repeats", be_repeats, "timed repetitions");

  auto* e3 = app.add_subcommand("extend3d", "extend a 2-D architecture to 3-D");
  std::string e3_arch, e3_out;
  e3->add_option("--arch", e3_arch, "architecture file")->required();
  e3->add_option("--out", e3_out, "write the 3-D architecture file here");

  auto* pl = app.add_subcommand("pipeline", "run all phases in order, resuming from artifacts");
  add_common(pl);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return phase_gen_data(common);
    if (tt->parsed()) return phase_train_teacher(common, !plain);
    if (se->parsed()) return phase_search(common, teacher_flag);
    if (de->parsed())
      return phase_derive(weights_path, derive_out, derive_classes, derive_in_channels);
    if (tr->parsed()) return phase_transfer(common, arch_flag, transfer_teacher, init_mode, false);
    if (sc->parsed()) return phase_transfer(common, scratch_arch, "", "fresh", true);
    if (ev->parsed()) return phase_eval(common, eval_ckpt, eval_split);
    if (an->parsed()) {
      check_input(flops_mode == "mac" || flops_mode == "2x", "--flops must be mac or 2x");
      return phase_analyze(an_arch, an_classes, an_input, include_aux, flops_mode == "2x");
    }
    if (be->parsed()) return phase_bench(be_arch, be_classes, be_input, be_batch, be_repeats);
    if (e3->parsed()) return phase_extend3d(e3_arch, e3_out);
    if (pl->parsed()) return phase_pipeline(common);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
