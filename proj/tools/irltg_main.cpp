// Command-line front end: dataset generation, pretraining, IRL training,
// sampling, and evaluation, all driven by one JSON config plus a few
// targeted overrides. Errors leave as one-line JSON on stderr.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "irltg/irltg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out;
  std::optional<int> steps;
};

void add_common(CLI::App* sub, CommonOpts& opts, const std::string& steps_meaning) {
  sub->add_option("--config", opts.config_path, "JSON config file (defaults apply when omitted)");
  sub->add_option("--seed", opts.seed, "override the config seed");
  sub->add_option("--out", opts.out, "override the output directory");
  sub->add_option("--steps", opts.steps, "override " + steps_meaning);
}

irltg::RunConfig make_config(const CommonOpts& opts) {
  irltg::RunConfig cfg;
  if (!opts.config_path.empty()) cfg = irltg::load_run_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.out_dir = opts.out;
  return cfg;
}

// Every command archives the merged effective config in its output directory.
void echo_config(const irltg::RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "effective_config.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw irltg::IoError(irltg::IoError::Kind::open_failed,
                         "cannot write " + path.string());
  out << cfg.to_json().dump(2) << '\n';
}

std::string out_file(const irltg::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

std::string iter_name(const char* stem, int iteration) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_it%04d.ckpt", stem, iteration);
  return buf;
}

std::vector<std::vector<int>> require_token_file(const std::string& path, const char* what) {
  if (path.empty())
    throw irltg::ArgumentError(std::string(what) + " requires a token file path in the config");
  return irltg::read_token_file(path);
}

json train_log_line(const irltg::IterRecord& rec) {
  json line = {{"iteration", rec.iteration},
               {"objective", rec.objective},
               {"mean_real_reward", rec.mean_real_reward},
               {"mean_gen_reward", rec.mean_gen_reward},
               {"entropy", rec.entropy},
               {"ess", rec.ess}};
  line["nll_oracle"] = rec.nll_oracle ? json(*rec.nll_oracle) : json(nullptr);
  return line;
}

irltg::GeneratorParams init_or_load_generator(const irltg::RunConfig& cfg) {
  if (!cfg.generator_path.empty()) {
    auto gp = irltg::load_generator(cfg.generator_path);
    if (gp.v_total != cfg.v_content + irltg::kReservedTokens || gp.d_emb != cfg.d_emb ||
        gp.d_hid != cfg.d_hid)
      throw irltg::ArgumentError("generator checkpoint dims disagree with the config");
    return gp;
  }
  return irltg::GeneratorParams::init(cfg.v_content + irltg::kReservedTokens, cfg.d_emb,
                                      cfg.d_hid, irltg::RngStream(cfg.seed).child("init"),
                                      cfg.init_scale);
}

int cmd_oracle_gen(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  if (opts.steps) cfg.n_train = *opts.steps;
  cfg.validate();
  echo_config(cfg);

  const auto oracle = irltg::make_oracle(cfg.seed, cfg.v_content, cfg.d_emb, cfg.d_hid);
  const auto data = irltg::generate_dataset(oracle, cfg.n_train, cfg.seq_len,
                                            irltg::RngStream(cfg.seed).child("data"), cfg.threads);
  const std::string oracle_path = out_file(cfg, "oracle.ckpt");
  const std::string data_path = out_file(cfg, "train.txt");
  irltg::save_oracle(oracle_path, oracle);
  irltg::write_token_file(data_path, data);

  std::cout << json{{"command", "oracle-gen"},
                    {"oracle", oracle_path},
                    {"data", data_path},
                    {"n", cfg.n_train},
                    {"seq_len", cfg.seq_len}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_pretrain(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  if (opts.steps) cfg.pretrain_epochs = *opts.steps;
  cfg.validate();
  echo_config(cfg);

  const auto data = require_token_file(cfg.data_path, "pretrain");
  auto gp = init_or_load_generator(cfg);
  const auto losses = irltg::mle_pretrain(gp, data, cfg.pretrain_epochs, cfg.batch_real, cfg.beta,
                                          cfg.mode, cfg.grad_clip,
                                          irltg::RngStream(cfg.seed).child("pretrain"), cfg.threads);

  const std::string gen_path = out_file(cfg, "generator.ckpt");
  irltg::save_generator(gen_path, gp);
  const std::string log_path = out_file(cfg, "pretrain_log.jsonl");
  {
    std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
    if (!log)
      throw irltg::IoError(irltg::IoError::Kind::open_failed, "cannot write " + log_path);
    for (size_t e = 0; e < losses.size(); ++e)
      log << json{{"epoch", e}, {"loss", losses[e]}}.dump() << '\n';
  }

  json result = {{"command", "pretrain"},
                 {"epochs", cfg.pretrain_epochs},
                 {"generator", gen_path},
                 {"log", log_path}};
  result["final_loss"] = losses.empty() ? json(nullptr) : json(losses.back());
  std::cout << result.dump() << '\n';
  return 0;
}

int cmd_train(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  if (opts.steps) cfg.iterations = *opts.steps;
  cfg.validate();
  echo_config(cfg);

  const auto data = require_token_file(cfg.data_path, "train");
  auto gp = init_or_load_generator(cfg);
  irltg::RewardParams rp;
  if (!cfg.reward_path.empty()) {
    rp = irltg::load_reward(cfg.reward_path);
    if (rp.v_total != gp.v_total)
      throw irltg::ArgumentError("reward checkpoint vocabulary disagrees with the generator");
  } else {
    rp = irltg::RewardParams::init(gp.v_total, cfg.r_d_emb, cfg.r_d_hid, cfg.r_d_mlp,
                                   cfg.keep_prob, irltg::RngStream(cfg.seed).child("r_init"),
                                   cfg.init_scale);
  }
  std::optional<irltg::OracleModel> oracle;
  if (!cfg.oracle_path.empty()) oracle = irltg::load_oracle(cfg.oracle_path);

  const std::string log_path = out_file(cfg, "train_log.jsonl");
  std::ofstream log(log_path, std::ios::binary | std::ios::trunc);
  if (!log) throw irltg::IoError(irltg::IoError::Kind::open_failed, "cannot write " + log_path);

  const auto callback = [&](int it, const irltg::GeneratorParams& g,
                            const irltg::RewardParams& r, const irltg::IterRecord& rec) {
    irltg::save_generator(out_file(cfg, iter_name("gen", it)), g);
    irltg::save_reward(out_file(cfg, iter_name("reward", it)), r);
    log << train_log_line(rec).dump() << '\n';
    log.flush();
  };

  const irltg::TrainConfig tc = cfg.to_train_config();
  const auto report =
      irltg::run_irl(gp, rp, data, tc, oracle ? &*oracle : nullptr, callback);

  const std::string gen_path = out_file(cfg, "generator.ckpt");
  const std::string reward_path = out_file(cfg, "reward.ckpt");
  irltg::save_generator(gen_path, gp);
  irltg::save_reward(reward_path, rp);

  json result = {{"command", "train"},
                 {"iterations", cfg.iterations},
                 {"generator", gen_path},
                 {"reward", reward_path},
                 {"log", log_path}};
  if (!report.records.empty()) {
    result["final_objective"] = report.records.back().objective;
    if (report.records.back().nll_oracle)
      result["final_nll_oracle"] = *report.records.back().nll_oracle;
  }
  std::cout << result.dump() << '\n';
  return 0;
}

int cmd_sample(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  if (opts.steps) cfg.sample_count = *opts.steps;
  cfg.validate();
  if (cfg.generator_path.empty())
    throw irltg::ArgumentError("sample requires generator_path in the config");
  echo_config(cfg);

  const auto gp = irltg::load_generator(cfg.generator_path);
  const auto batch = irltg::sample_batch(gp, cfg.sample_count, cfg.seq_len, cfg.mode,
                                         irltg::RngStream(cfg.seed).child("sample"), cfg.threads);
  std::vector<std::vector<int>> seqs;
  seqs.reserve(batch.size());
  for (const auto& traj : batch) seqs.push_back(traj.tokens);

  const std::string sample_path = out_file(cfg, "samples.txt");
  const bool decoded = !cfg.vocab_path.empty();
  if (decoded) {
    const auto vocab = irltg::read_vocab_file(cfg.vocab_path);
    std::ofstream out(sample_path, std::ios::binary | std::ios::trunc);
    if (!out)
      throw irltg::IoError(irltg::IoError::Kind::open_failed, "cannot write " + sample_path);
    for (const auto& seq : seqs) {
      const auto tokens = irltg::decode(vocab, seq);
      for (size_t i = 0; i < tokens.size(); ++i) out << (i ? " " : "") << tokens[i];
      out << '\n';
    }
  } else {
    irltg::write_token_file(sample_path, seqs);
  }

  std::cout << json{{"command", "sample"},
                    {"n", cfg.sample_count},
                    {"samples", sample_path},
                    {"decoded", decoded}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval_nll(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  if (opts.steps) cfg.eval_samples = *opts.steps;
  cfg.validate();
  if (cfg.oracle_path.empty())
    throw irltg::ArgumentError("eval-nll requires oracle_path in the config");
  echo_config(cfg);

  const auto oracle = irltg::load_oracle(cfg.oracle_path);
  std::vector<std::vector<int>> samples;
  std::string source;
  if (!cfg.generator_path.empty()) {
    const auto gp = irltg::load_generator(cfg.generator_path);
    const auto batch = irltg::sample_batch(gp, cfg.eval_samples, cfg.seq_len, cfg.mode,
                                           irltg::RngStream(cfg.seed).child("eval"), cfg.threads);
    samples.reserve(batch.size());
    for (const auto& traj : batch) samples.push_back(traj.tokens);
    source = cfg.generator_path;
  } else {
    samples = require_token_file(cfg.data_path, "eval-nll");
    source = cfg.data_path;
  }
  const double nll = irltg::nll_oracle(oracle, samples, cfg.threads);

  std::cout << json{{"command", "eval-nll"},
                    {"nll_per_token", nll},
                    {"n", samples.size()},
                    {"source", source}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_eval_bleu(const CommonOpts& opts) {
  irltg::RunConfig cfg = make_config(opts);
  cfg.validate();
  if (cfg.test_path.empty())
    throw irltg::ArgumentError("eval-bleu requires test_path in the config");
  echo_config(cfg);

  const auto testset = irltg::read_token_file(cfg.test_path);
  std::vector<std::vector<int>> generated;
  if (!cfg.generator_path.empty()) {
    const int n = opts.steps ? *opts.steps
                             : std::max(cfg.bleu_eval_sample, cfg.bleu_ref_sample);
    if (n < 1) throw irltg::ArgumentError("eval-bleu: sample count must be >= 1");
    const auto gp = irltg::load_generator(cfg.generator_path);
    const auto batch = irltg::sample_batch(gp, n, cfg.seq_len, cfg.mode,
                                           irltg::RngStream(cfg.seed).child("bleu"), cfg.threads);
    generated.reserve(batch.size());
    for (const auto& traj : batch) generated.push_back(traj.tokens);
  } else {
    generated = require_token_file(cfg.data_path, "eval-bleu");
  }

  irltg::BleuOptions bleu_opts;
  bleu_opts.smooth_eps = cfg.bleu_smooth_eps;
  const auto report = irltg::compute_metrics(
      generated, testset, cfg.bleu_orders, static_cast<size_t>(cfg.bleu_eval_sample),
      static_cast<size_t>(cfg.bleu_ref_sample), cfg.seed, bleu_opts, cfg.threads);
  json out = report.to_json();
  out["command"] = "eval-bleu";
  std::cout << out.dump() << '\n';
  return 0;
}

int fail_json(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", message}, {"kind", kind}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-entropy inverse-RL trainer for sequence generation"};
  app.require_subcommand(1);

  CommonOpts oracle_gen, pretrain, train, sample, eval_nll, eval_bleu;
  add_common(app.add_subcommand("oracle-gen", "create a synthetic oracle and its dataset"),
             oracle_gen, "the number of generated sequences");
  add_common(app.add_subcommand("pretrain", "maximum-likelihood pretraining of the generator"),
             pretrain, "the number of pretraining epochs");
  add_common(app.add_subcommand("train", "alternating reward/policy training"), train,
             "the number of training iterations");
  add_common(app.add_subcommand("sample", "draw sequences from a generator checkpoint"), sample,
             "the number of samples");
  add_common(app.add_subcommand("eval-nll", "per-token NLL under an oracle checkpoint"), eval_nll,
             "the number of generator samples to score");
  add_common(app.add_subcommand("eval-bleu", "forward/backward/harmonic BLEU report"), eval_bleu,
             "the number of generator samples to score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    return fail_json("argument", e.what());
  }

  try {
    if (app.got_subcommand("oracle-gen")) return cmd_oracle_gen(oracle_gen);
    if (app.got_subcommand("pretrain")) return cmd_pretrain(pretrain);
    if (app.got_subcommand("train")) return cmd_train(train);
    if (app.got_subcommand("sample")) return cmd_sample(sample);
    if (app.got_subcommand("eval-nll")) return cmd_eval_nll(eval_nll);
    if (app.got_subcommand("eval-bleu")) return cmd_eval_bleu(eval_bleu);
    return fail_json("internal", "no subcommand dispatched");
  } catch (const irltg::ArgumentError& e) {
    return fail_json("argument", e.what());
  } catch (const irltg::NumericError& e) {
    return fail_json("numeric", e.what());
  } catch (const irltg::IoError& e) {
    return fail_json("io", e.what());
  } catch (const std::exception& e) {
    return fail_json("internal", e.what());
  }
}
