// lordnet: generate datasets, train, detect and run BER sweeps.
//
// Exit codes: 0 success, 2 usage, 3 validation, 4 numerical or training
// failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lordnet/lordnet.hpp"

namespace {

using lordnet::text_io::json;

enum Exit { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool parse_switch(const std::string& value, const char* flag) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw UsageError(std::string(flag) + " expects on|off, got '" + value + "'");
}

std::string config_scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "on" : "off";
  return v.dump();
}

/// Applies a JSON config object to `cmd`: keys mirror long flag names
/// ("snr-db" or "snr_db"); options already given on the command line keep
/// their value.
void apply_config(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed config file '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    std::string name = key;
    for (auto& c : name)
      if (c == '_') c = '-';
    if (name == "config") continue;
    CLI::Option* opt = cmd.get_option_no_throw("--" + name);
    if (!opt) throw UsageError("unknown key '" + key + "' in config file '" + path + "'");
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& item : value) opt->add_result(config_scalar(item));
    } else {
      opt->add_result(config_scalar(value));
    }
    opt->run_callback();
  }
}

void require(const CLI::App& cmd, const std::string& flag, bool present) {
  if (!present) throw UsageError(cmd.get_name() + ": " + flag + " is required");
}

std::vector<double> row_vector(const lordnet::Vector& v) { return {v.data(), v.data() + v.size()}; }

// ---------------------------------------------------------------------------

struct TrainFlags {
  lordnet::TrainConfig cfg;
  std::string mode = "two-stage";
  std::string train_c = "off";
  std::string train_h = "on";
  std::string preconditioner = "diagonal";

  void add(CLI::App& cmd) {
    cmd.add_option("--mode", mode, "two-stage | one-stage | alternating")->capture_default_str();
    cmd.add_option("--layers", cfg.L, "unfolded layers L")->capture_default_str();
    cmd.add_option("--stage2-layers", cfg.stage2_layers, "Stage-2 layer count (0: same as --layers)")
        ->capture_default_str();
    cmd.add_option("--delta", cfg.delta, "fixed step of the Stage-1 policy")->capture_default_str();
    cmd.add_option("--lr1", cfg.lr_stage1, "Stage-1 learning rate")->capture_default_str();
    cmd.add_option("--lr2", cfg.lr_stage2, "Stage-2 learning rate")->capture_default_str();
    cmd.add_option("--epochs1", cfg.epochs_stage1)->capture_default_str();
    cmd.add_option("--epochs2", cfg.epochs_stage2)->capture_default_str();
    cmd.add_option("--batch-size", cfg.batch_size, "mini-batch size (Stage 2, joint, variants)")->capture_default_str();
    cmd.add_option("--stage1-batch-size", cfg.stage1_batch_size,
                   "Stage-1 mini-batch (0: full batch up to 2048 samples)")
        ->capture_default_str();
    cmd.add_option("--train-c", train_c, "learn the noise levels: on|off")->capture_default_str();
    cmd.add_option("--train-h", train_h, "learn the channel: on|off")->capture_default_str();
    cmd.add_option("--preconditioner", preconditioner, "diagonal | full")
        ->check(CLI::IsMember({"diagonal", "full"}))
        ->capture_default_str();
  }

  lordnet::TrainConfig resolve(std::uint64_t seed, unsigned threads) {
    cfg.mode = lordnet::train_mode_from_string(mode);
    cfg.train_c = parse_switch(train_c, "--train-c");
    cfg.train_h = parse_switch(train_h, "--train-h");
    cfg.full_preconditioner = preconditioner == "full";
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.validate();
    return cfg;
  }
};

json train_config_json(const lordnet::TrainConfig& c) {
  return {{"mode", lordnet::to_string(c.mode)},
          {"layers", c.L},
          {"stage2_layers", c.stage2_L()},
          {"delta", c.delta},
          {"lr1", c.lr_stage1},
          {"lr2", c.lr_stage2},
          {"epochs1", c.epochs_stage1},
          {"epochs2", c.epochs_stage2},
          {"batch_size", c.batch_size},
          {"stage1_batch_size", c.stage1_batch_size},
          {"train_c", c.train_c},
          {"train_h", c.train_h},
          {"preconditioner", c.full_preconditioner ? "full" : "diagonal"},
          {"h_init_std", c.h_init_std},
          {"seed", c.seed},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

unsigned resolve_threads(unsigned threads) { return threads ? threads : lordnet::default_threads(); }

// ---------------------------------------------------------------------------
// generate

struct GenerateCmd {
  long m = 0, n = 0, batch = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::string out, channel_file, export_channel, config;
  unsigned threads = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "generate a labeled one-bit dataset");
    cmd->add_option("--m", m, "receive dimension");
    cmd->add_option("--n", n, "transmit dimension");
    cmd->add_option("--snr-db", snr_db)->capture_default_str();
    cmd->add_option("--batch", batch, "number of samples B");
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--out", out, "dataset file to write");
    cmd->add_option("--channel-file", channel_file, "import H instead of sampling a Rayleigh channel");
    cmd->add_option("--export-channel", export_channel, "also write the channel used");
    cmd->add_option("--config", config, "JSON config (flags take precedence)");
    cmd->add_option("--threads", threads, "worker cap (0: all cores)")->capture_default_str();
    cmd->callback([this, cmd] { run(*cmd); });
  }

  void run(CLI::App& cmd) {
    if (!config.empty()) apply_config(cmd, config);
    require(cmd, "--out", !out.empty());
    require(cmd, "--batch", batch > 0);
    lordnet::Matrix H;
    auto kind = lordnet::ChannelKind::Rayleigh;
    if (!channel_file.empty()) {
      H = lordnet::import_channel(channel_file);
      if ((m && m != H.rows()) || (n && n != H.cols()))
        throw lordnet::ValidationError("channel file '" + channel_file + "' is " + std::to_string(H.rows()) + "x" +
                                       std::to_string(H.cols()) + " but --m/--n ask for " + std::to_string(m) + "x" +
                                       std::to_string(n));
      kind = lordnet::ChannelKind::Imported;
    } else {
      require(cmd, "--m", m > 0);
      require(cmd, "--n", n > 0);
      H = lordnet::sample_rayleigh_channel(m, n, seed);
    }
    const auto theta = lordnet::make_system(H, snr_db);
    const auto ds = lordnet::generate_dataset(theta, lordnet::Constellation::bpsk(), batch, seed, {snr_db, kind},
                                              resolve_threads(threads));
    const json resolved = {{"command", "generate"},          {"m", H.rows()},  {"n", H.cols()},
                           {"snr_db", snr_db},               {"batch", batch}, {"seed", seed},
                           {"channel_file", channel_file},   {"sigma", theta.sigma[0]}};
    lordnet::save_dataset(ds, out, resolved);
    if (!export_channel.empty()) lordnet::export_channel(H, export_channel);
    std::cout << json{{"m", ds.meta.m},
                      {"n", ds.meta.n},
                      {"B", ds.meta.B},
                      {"snr_db", ds.meta.snr_db},
                      {"seed", ds.meta.seed},
                      {"channel_kind", lordnet::to_string(ds.meta.channel_kind)},
                      {"out", out}}
                     .dump()
              << '\n';
  }
};

// ---------------------------------------------------------------------------
// train

json log_record_json(const lordnet::LogRecord& r) {
  json j = {{"epoch", r.epoch}, {"stage", r.stage}, {"loss_train", r.loss_train}};
  j["loss_heldout"] = r.loss_heldout ? json(*r.loss_heldout) : json(nullptr);
  if (r.ber_heldout) j["ber_heldout"] = *r.ber_heldout;
  j["wall_ms"] = r.wall_ms;
  return j;
}

struct TrainCmd {
  TrainFlags flags;
  std::string data, out, log, heldout, config, variant = "none";
  long rank = 1;
  long eval_every = 10;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train the unfolded detector (or a benchmark variant)");
    cmd->add_option("--data", data, "training dataset");
    cmd->add_option("--out", out, "checkpoint to write");
    cmd->add_option("--log", log, "newline-JSON training log (default: <out>.log.jsonl)");
    cmd->add_option("--heldout", heldout, "held-out dataset for periodic evaluation");
    cmd->add_option("--eval-every", eval_every, "held-out evaluation period in epochs")->capture_default_str();
    cmd->add_option("--variant", variant, "none | benchmark1 | benchmark2")
        ->check(CLI::IsMember({"none", "benchmark1", "benchmark2"}))
        ->capture_default_str();
    cmd->add_option("--rank", rank, "benchmark-2 rank")->capture_default_str();
    cmd->add_option("--seed", seed)->capture_default_str();
    cmd->add_option("--config", config, "JSON config (flags take precedence)");
    cmd->add_option("--threads", threads, "worker cap (0: all cores)")->capture_default_str();
    flags.add(*cmd);
    cmd->callback([this, cmd] { run(*cmd); });
  }

  void run(CLI::App& cmd) {
    if (!config.empty()) apply_config(cmd, config);
    require(cmd, "--data", !data.empty());
    require(cmd, "--out", !out.empty());
    const auto cfg = flags.resolve(seed, resolve_threads(threads));
    const auto ds = lordnet::load_dataset(data);
    std::optional<lordnet::Dataset> held;
    if (!heldout.empty()) held = lordnet::load_dataset(heldout);

    std::ofstream log_out(log.empty() ? out + ".log.jsonl" : log, std::ios::trunc);
    if (!log_out) throw lordnet::ConfigError("cannot open the training log for writing");
    lordnet::TrainOptions opts;
    opts.heldout = held ? &*held : nullptr;
    opts.eval_every = eval_every;
    opts.on_record = [&](const lordnet::LogRecord& r) { log_out << log_record_json(r).dump() << '\n' << std::flush; };

    json resolved = train_config_json(cfg);
    resolved["command"] = "train";
    resolved["data"] = data;
    resolved["heldout"] = heldout;
    resolved["variant"] = variant;
    if (variant == "benchmark2") resolved["rank"] = rank;

    lordnet::Checkpoint ck;
    ck.adam = cfg.adam;
    ck.train_h = cfg.train_h;
    ck.train_c = cfg.train_c;
    ck.config = resolved;
    if (variant == "none") {
      const auto result = lordnet::train(ds, cfg, opts);
      ck.theta = result.theta;
      ck.phi = result.phi;
    } else {
      const auto kind = variant == "benchmark1" ? lordnet::VariantWeights::Kind::Full
                                                : lordnet::VariantWeights::Kind::LowRank;
      auto result = lordnet::train_variant(ds, cfg, lordnet::initial_variant(ds, cfg, kind, rank), opts);
      ck.theta = lordnet::make_system(lordnet::Matrix::Zero(ds.meta.m, ds.meta.n), ds.meta.snr_db);
      ck.theta.b = ds.b;
      ck.phi = lordnet::UnfoldedWeights::basic_policy(cfg.L, cfg.delta);
      ck.train_h = ck.train_c = false;
      ck.variant = std::move(result.weights);
    }
    lordnet::save_checkpoint(ck, out);
    const auto count = ck.variant ? ck.variant->parameter_count()
                                  : lordnet::lordnet_parameter_count(ck.theta.m(), ck.theta.n(), ck.phi, ck.train_h,
                                                                     ck.train_c);
    std::cout << json{{"out", out}, {"trainable_parameters", count}}.dump() << '\n';
  }
};

// ---------------------------------------------------------------------------
// detect

struct DetectCmd {
  std::string checkpoint, data, detector = "lordnet", out, channel_file, validation, config;
  int iters = lordnet::kNmlIterations;
  double step = 0.0;
  unsigned threads = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("detect", "detect symbols and report BER");
    cmd->add_option("--checkpoint", checkpoint, "trained checkpoint");
    cmd->add_option("--data", data, "dataset to detect");
    cmd->add_option("--detector", detector, "lordnet | variant | nml | relaxed | bruteforce")
        ->check(CLI::IsMember({"lordnet", "variant", "nml", "relaxed", "bruteforce"}))
        ->capture_default_str();
    cmd->add_option("--out", out, "estimates file to write");
    cmd->add_option("--channel-file", channel_file, "true channel for the coherent detectors");
    cmd->add_option("--iters", iters, "iterations of nml / relaxed")->capture_default_str();
    cmd->add_option("--step", step, "step of nml / relaxed (nml: 0 selects by grid search)")->capture_default_str();
    cmd->add_option("--validation", validation, "dataset for the nml step search (default: --data)");
    cmd->add_option("--config", config, "JSON config (flags take precedence)");
    cmd->add_option("--threads", threads, "worker cap (0: all cores)")->capture_default_str();
    cmd->callback([this, cmd] { run(*cmd); });
  }

  lordnet::SystemParams coherent_theta(const lordnet::Dataset& ds, const std::optional<lordnet::Checkpoint>& ck) const {
    if (!channel_file.empty()) {
      auto theta = lordnet::make_system(lordnet::import_channel(channel_file), ds.meta.snr_db);
      theta.b = ds.b;
      return theta;
    }
    if (ck && !ck->variant) return ck->theta;
    throw lordnet::ValidationError("detector '" + detector + "' needs --channel-file or a non-variant --checkpoint");
  }

  void run(CLI::App& cmd) {
    if (!config.empty()) apply_config(cmd, config);
    require(cmd, "--data", !data.empty());
    require(cmd, "--out", !out.empty());
    const auto th = resolve_threads(threads);
    const auto ds = lordnet::load_dataset(data);
    std::optional<lordnet::Checkpoint> ck;
    if (!checkpoint.empty()) ck = lordnet::load_checkpoint(checkpoint);
    if ((detector == "lordnet" || detector == "variant") && !ck)
      throw UsageError("detector '" + detector + "' needs --checkpoint");
    if (detector == "lordnet" && ck->variant)
      throw lordnet::ValidationError("checkpoint holds a benchmark variant; use --detector variant");
    if (detector == "variant" && ck && !ck->variant)
      throw lordnet::ValidationError("checkpoint holds no benchmark variant; use --detector lordnet");

    lordnet::RowMatrix est(ds.size(), ds.meta.n);
    json resolved = {{"command", "detect"}, {"detector", detector}, {"data", data},
                     {"checkpoint", checkpoint}, {"channel_file", channel_file}};
    if (detector == "lordnet") {
      lordnet::detail::check_dataset_matches(ds, ck->theta);
      lordnet::parallel_for(static_cast<std::size_t>(ds.size()), th, [&](std::size_t idx) {
        const auto p = static_cast<Eigen::Index>(idx);
        est.row(p) = lordnet::detect(ds.observation(p), ck->theta, ck->phi, ds.constellation).transpose();
      });
    } else if (detector == "variant") {
      if (ck->variant->m != ds.meta.m || ck->variant->n != ds.meta.n)
        throw lordnet::ValidationError("checkpoint variant dimensions do not match the dataset");
      const lordnet::Vector x0 = lordnet::Vector::Zero(ds.meta.n);
      lordnet::parallel_for(static_cast<std::size_t>(ds.size()), th, [&](std::size_t idx) {
        const auto p = static_cast<Eigen::Index>(idx);
        est.row(p) = lordnet::project(lordnet::variant_forward(x0, ds.observation(p), *ck->variant, ds.b),
                                      ds.constellation)
                         .transpose();
      });
    } else {
      const auto theta = coherent_theta(ds, ck);
      if (theta.m() != ds.meta.m || theta.n() != ds.meta.n)
        throw lordnet::ValidationError("channel dimensions do not match the dataset");
      if (detector == "bruteforce") {
        lordnet::parallel_for(static_cast<std::size_t>(ds.size()), th, [&](std::size_t idx) {
          const auto p = static_cast<Eigen::Index>(idx);
          est.row(p) = lordnet::brute_force_mle(ds.observation(p), theta, ds.constellation).transpose();
        });
      } else {
        double s = step;
        if (detector == "nml" && s == 0.0) {
          const auto val = validation.empty() ? ds : lordnet::load_dataset(validation);
          s = lordnet::grid_search_step(theta, val, lordnet::default_step_grid(), iters, th);
        }
        if (!(s > 0.0)) throw UsageError("--step must be > 0 for the relaxed detector");
        resolved["step"] = s;
        resolved["iters"] = iters;
        lordnet::parallel_for(static_cast<std::size_t>(ds.size()), th, [&](std::size_t idx) {
          const auto p = static_cast<Eigen::Index>(idx);
          est.row(p) = lordnet::nml_detect(ds.observation(p), theta, ds.constellation, iters, s).transpose();
        });
      }
    }
    const auto count = lordnet::count_errors(est, ds.x_true);
    auto file = lordnet::text_io::open_write(out);
    file << json{{"format", "lordnet-estimates"},
                 {"format_version", 1},
                 {"B", ds.size()},
                 {"n", ds.meta.n},
                 {"ber", count.rate()},
                 {"num_errors", count.errors},
                 {"num_bits", count.bits},
                 {"config", resolved}}
                .dump()
         << '\n';
    for (Eigen::Index p = 0; p < est.rows(); ++p) {
      for (Eigen::Index j = 0; j < est.cols(); ++j)
        file << (j ? " " : "") << lordnet::text_io::format_double(est(p, j));
      file << '\n';
    }
    std::cout << json{{"detector", detector}, {"ber", count.rate()}, {"num_errors", count.errors},
                      {"num_bits", count.bits}}
                     .dump()
              << '\n';
  }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCmd {
  TrainFlags flags;
  std::string axis, out, config, detector = "lordnet", channel_file, checkpoint, data;
  std::vector<double> snr_list;
  std::vector<long> train_sizes;
  double snr_db = 8.0;
  long m = 32, n = 8, train_size = 512, test_size = 2048, validation_size = 512;
  int trials = 1;
  int iters = lordnet::kNmlIterations;
  double step = 0.01;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("sweep", "BER versus SNR, training size or layer");
    cmd->add_option("--axis", axis, "snr | train-size | layer")->check(CLI::IsMember({"snr", "train-size", "layer"}));
    cmd->add_option("--out", out, "report prefix (writes <out>.json and <out>.csv)");
    cmd->add_option("--snr-list", snr_list, "SNR points in dB, comma separated")->delimiter(',');
    cmd->add_option("--train-sizes", train_sizes, "training sizes, comma separated")->delimiter(',');
    cmd->add_option("--snr-db", snr_db, "SNR of the train-size sweep")->capture_default_str();
    cmd->add_option("--detector", detector, "lordnet | nml | relaxed | bruteforce")
        ->check(CLI::IsMember({"lordnet", "nml", "relaxed", "bruteforce"}))
        ->capture_default_str();
    cmd->add_option("--m", m)->capture_default_str();
    cmd->add_option("--n", n)->capture_default_str();
    cmd->add_option("--trials", trials)->capture_default_str();
    cmd->add_option("--train-size", train_size)->capture_default_str();
    cmd->add_option("--test-size", test_size)->capture_default_str();
    cmd->add_option("--validation-size", validation_size, "nml step search set")->capture_default_str();
    cmd->add_option("--iters", iters, "iterations of nml / relaxed")->capture_default_str();
    cmd->add_option("--step", step, "step of the relaxed detector")->capture_default_str();
    cmd->add_option("--channel-file", channel_file, "fixed imported channel");
    cmd->add_option("--checkpoint", checkpoint, "trained checkpoint (layer axis)");
    cmd->add_option("--data", data, "test dataset (layer axis)");
    cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    cmd->add_option("--config", config, "JSON config (flags take precedence)");
    cmd->add_option("--threads", threads, "worker cap (0: all cores)")->capture_default_str();
    flags.add(*cmd);
    cmd->callback([this, cmd] { run(*cmd); });
  }

  void run(CLI::App& cmd) {
    if (!config.empty()) apply_config(cmd, config);
    require(cmd, "--axis", !axis.empty());
    require(cmd, "--out", !out.empty());
    const auto th = resolve_threads(threads);
    lordnet::BerReport report;
    if (axis == "layer") {
      require(cmd, "--checkpoint", !checkpoint.empty());
      require(cmd, "--data", !data.empty());
      const auto ck = lordnet::load_checkpoint(checkpoint);
      if (ck.variant) throw lordnet::ValidationError("the layer axis needs a non-variant checkpoint");
      const auto ds = lordnet::load_dataset(data);
      report = lordnet::per_layer_ber(ck.theta, ck.phi, ds, th);
      report.config = {{"command", "sweep"}, {"axis", axis}, {"checkpoint", checkpoint}, {"data", data},
                       {"model", ck.config}};
    } else {
      lordnet::ExperimentConfig exp;
      exp.m = m;
      exp.n = n;
      exp.detector = lordnet::detector_kind_from_string(detector);
      exp.train = flags.resolve(seed, th);
      exp.train_size = train_size;
      exp.test_size = test_size;
      exp.validation_size = validation_size;
      exp.nml_iters = exp.relaxed_iters = iters;
      exp.relaxed_step = step;
      exp.seed = seed;
      exp.threads = th;
      if (!channel_file.empty()) {
        exp.channel = lordnet::import_channel(channel_file);
        exp.m = exp.channel->rows();
        exp.n = exp.channel->cols();
      }
      if (axis == "snr") {
        require(cmd, "--snr-list", !snr_list.empty());
        report = lordnet::sweep_snr(exp, snr_list, trials);
      } else {
        require(cmd, "--train-sizes", !train_sizes.empty());
        report = lordnet::sweep_train_size(exp, train_sizes, snr_db, trials);
      }
      report.config["command"] = "sweep";
      report.config["axis"] = axis;
      report.config["trials"] = trials;
      report.config["train"] = train_config_json(exp.train);
      report.config["threads_do_not_affect_results"] = true;
    }
    lordnet::write_report(report, out);
    std::cout << report.to_csv();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lordnet: blind one-bit MIMO detection by an unfolded relaxed-ML network"};
  app.require_subcommand(1);
  GenerateCmd generate;
  TrainCmd train;
  DetectCmd detect;
  SweepCmd sweep;
  generate.add(app);
  train.add(app);
  detect.add(app);
  sweep.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const lordnet::Error& e) {
    using K = lordnet::Error::Kind;
    switch (e.kind()) {
      case K::Config:
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
      case K::Numerical:
      case K::Training:
      case K::Domain:
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
      default:
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidation;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
