#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "irltg/errors.hpp"
#include "irltg/irl_trainer.hpp"
#include "irltg/policy_net.hpp"

namespace irltg {

inline std::string mode_name(SeqMode mode) {
  return mode == SeqMode::fixed_length ? "fixed_length" : "eos_terminated";
}

inline SeqMode mode_from_name(const std::string& name) {
  if (name == "fixed_length") return SeqMode::fixed_length;
  if (name == "eos_terminated") return SeqMode::eos_terminated;
  throw ArgumentError("config: unknown mode '" + name + "'");
}

inline std::string baseline_name(BaselineKind b) {
  return b == BaselineKind::none ? "none" : "batch_mean";
}

inline BaselineKind baseline_from_name(const std::string& name) {
  if (name == "none") return BaselineKind::none;
  if (name == "batch_mean") return BaselineKind::batch_mean;
  throw ArgumentError("config: unknown baseline '" + name + "'");
}

// Every run-level knob the command-line tool understands. Defaults mirror the
// synthetic-benchmark setup; any JSON config may override a subset, and the
// effective values are echoed back as JSON at startup.
struct RunConfig {
  uint64_t seed = 1;
  int threads = 1;
  SeqMode mode = SeqMode::fixed_length;

  // Generator and oracle dimensions.
  int v_content = 5000;
  int seq_len = 20;
  int d_emb = 32;
  int d_hid = 32;
  double init_scale = 0.08;

  // Reward approximator dimensions.
  int r_d_emb = 32;
  int r_d_hid = 32;
  int r_d_mlp = 32;
  double keep_prob = 0.75;

  // Optimization.
  int batch_real = 64;
  int batch_gen = 64;
  int n_r = 10;
  int n_g = 1;
  double alpha = 0.0004;
  double beta = 0.005;
  int rollouts = 8;
  int pretrain_epochs = 50;
  int iterations = 50;
  std::string baseline = "none";
  double grad_clip = 5.0;
  int eval_samples = 500;

  // Dataset generation.
  int n_train = 10000;

  // BLEU evaluation.
  std::vector<int> bleu_orders = {2, 3, 4, 5};
  int bleu_eval_sample = 1000;
  int bleu_ref_sample = 5000;
  double bleu_smooth_eps = 1e-9;

  // Sampling.
  int sample_count = 100;

  // File locations; empty means "not provided".
  std::string out_dir = "out";
  std::string data_path;
  std::string test_path;
  std::string oracle_path;
  std::string generator_path;
  std::string reward_path;
  std::string vocab_path;

  void apply_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ArgumentError("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      const auto want_int = [&](int& dst) {
        if (!value.is_number_integer()) throw ArgumentError("config: '" + key + "' must be an integer");
        dst = value.get<int>();
      };
      const auto want_num = [&](double& dst) {
        if (!value.is_number()) throw ArgumentError("config: '" + key + "' must be a number");
        dst = value.get<double>();
      };
      if (key == "seed") {
        if (!value.is_number_unsigned())
          throw ArgumentError("config: 'seed' must be a non-negative integer");
        seed = value.get<uint64_t>();
      } else if (key == "threads") {
        want_int(threads);
      } else if (key == "mode") {
        if (!value.is_string()) throw ArgumentError("config: 'mode' must be a string");
        mode = mode_from_name(value.get<std::string>());
      } else if (key == "v_content") {
        want_int(v_content);
      } else if (key == "seq_len") {
        want_int(seq_len);
      } else if (key == "d_emb") {
        want_int(d_emb);
      } else if (key == "d_hid") {
        want_int(d_hid);
      } else if (key == "init_scale") {
        want_num(init_scale);
      } else if (key == "r_d_emb") {
        want_int(r_d_emb);
      } else if (key == "r_d_hid") {
        want_int(r_d_hid);
      } else if (key == "r_d_mlp") {
        want_int(r_d_mlp);
      } else if (key == "keep_prob") {
        want_num(keep_prob);
      } else if (key == "batch_real") {
        want_int(batch_real);
      } else if (key == "batch_gen") {
        want_int(batch_gen);
      } else if (key == "n_r") {
        want_int(n_r);
      } else if (key == "n_g") {
        want_int(n_g);
      } else if (key == "alpha") {
        want_num(alpha);
      } else if (key == "beta") {
        want_num(beta);
      } else if (key == "rollouts") {
        want_int(rollouts);
      } else if (key == "pretrain_epochs") {
        want_int(pretrain_epochs);
      } else if (key == "iterations") {
        want_int(iterations);
      } else if (key == "baseline") {
        if (!value.is_string()) throw ArgumentError("config: 'baseline' must be a string");
        baseline = value.get<std::string>();
        baseline_from_name(baseline);  // validates
      } else if (key == "grad_clip") {
        want_num(grad_clip);
      } else if (key == "eval_samples") {
        want_int(eval_samples);
      } else if (key == "n_train") {
        want_int(n_train);
      } else if (key == "bleu_orders") {
        if (!value.is_array()) throw ArgumentError("config: 'bleu_orders' must be an array");
        bleu_orders.clear();
        for (const auto& o : value) {
          if (!o.is_number_integer())
            throw ArgumentError("config: 'bleu_orders' entries must be integers");
          bleu_orders.push_back(o.get<int>());
        }
      } else if (key == "bleu_eval_sample") {
        want_int(bleu_eval_sample);
      } else if (key == "bleu_ref_sample") {
        want_int(bleu_ref_sample);
      } else if (key == "bleu_smooth_eps") {
        want_num(bleu_smooth_eps);
      } else if (key == "sample_count") {
        want_int(sample_count);
      } else if (key == "out_dir" || key == "data_path" || key == "test_path" ||
                 key == "oracle_path" || key == "generator_path" || key == "reward_path" ||
                 key == "vocab_path") {
        if (!value.is_string()) throw ArgumentError("config: '" + key + "' must be a string");
        const std::string s = value.get<std::string>();
        if (key == "out_dir")
          out_dir = s;
        else if (key == "data_path")
          data_path = s;
        else if (key == "test_path")
          test_path = s;
        else if (key == "oracle_path")
          oracle_path = s;
        else if (key == "generator_path")
          generator_path = s;
        else if (key == "reward_path")
          reward_path = s;
        else
          vocab_path = s;
      } else {
        throw ArgumentError("config: unknown key '" + key + "'");
      }
    }
  }

  void validate() const {
    if (threads < 1) throw ArgumentError("config: threads must be >= 1");
    if (v_content < 1) throw ArgumentError("config: v_content must be >= 1");
    if (seq_len < 1) throw ArgumentError("config: seq_len must be >= 1");
    if (d_emb < 1 || d_hid < 1 || r_d_emb < 1 || r_d_hid < 1 || r_d_mlp < 1)
      throw ArgumentError("config: model dims must be >= 1");
    if (!(init_scale > 0.0)) throw ArgumentError("config: init_scale must be > 0");
    if (!(keep_prob > 0.0 && keep_prob <= 1.0))
      throw ArgumentError("config: keep_prob must lie in (0, 1]");
    if (n_train < 1) throw ArgumentError("config: n_train must be >= 1");
    if (bleu_orders.empty()) throw ArgumentError("config: bleu_orders must be non-empty");
    for (int o : bleu_orders)
      if (o < 1) throw ArgumentError("config: bleu_orders entries must be >= 1");
    if (bleu_eval_sample < 1 || bleu_ref_sample < 1)
      throw ArgumentError("config: BLEU sample sizes must be >= 1");
    if (bleu_smooth_eps < 0.0) throw ArgumentError("config: bleu_smooth_eps must be >= 0");
    if (sample_count < 1) throw ArgumentError("config: sample_count must be >= 1");
    if (out_dir.empty()) throw ArgumentError("config: out_dir must be non-empty");
    to_train_config().validate();
  }

  TrainConfig to_train_config() const {
    TrainConfig t;
    t.batch_real = batch_real;
    t.batch_gen = batch_gen;
    t.n_r = n_r;
    t.n_g = n_g;
    t.alpha = alpha;
    t.beta = beta;
    t.rollouts = rollouts;
    t.pretrain_epochs = pretrain_epochs;
    t.max_len = seq_len;
    t.mode = mode;
    t.seed = seed;
    t.total_iterations = iterations;
    t.baseline = baseline_from_name(baseline);
    t.grad_clip = grad_clip;
    t.threads = threads;
    t.eval_samples = eval_samples;
    return t;
  }

  nlohmann::json to_json() const {
    return {{"seed", seed},
            {"threads", threads},
            {"mode", mode_name(mode)},
            {"v_content", v_content},
            {"seq_len", seq_len},
            {"d_emb", d_emb},
            {"d_hid", d_hid},
            {"init_scale", init_scale},
            {"r_d_emb", r_d_emb},
            {"r_d_hid", r_d_hid},
            {"r_d_mlp", r_d_mlp},
            {"keep_prob", keep_prob},
            {"batch_real", batch_real},
            {"batch_gen", batch_gen},
            {"n_r", n_r},
            {"n_g", n_g},
            {"alpha", alpha},
            {"beta", beta},
            {"rollouts", rollouts},
            {"pretrain_epochs", pretrain_epochs},
            {"iterations", iterations},
            {"baseline", baseline},
            {"grad_clip", grad_clip},
            {"eval_samples", eval_samples},
            {"n_train", n_train},
            {"bleu_orders", bleu_orders},
            {"bleu_eval_sample", bleu_eval_sample},
            {"bleu_ref_sample", bleu_ref_sample},
            {"bleu_smooth_eps", bleu_smooth_eps},
            {"sample_count", sample_count},
            {"out_dir", out_dir},
            {"data_path", data_path},
            {"test_path", test_path},
            {"oracle_path", oracle_path},
            {"generator_path", generator_path},
            {"reward_path", reward_path},
            {"vocab_path", vocab_path}};
  }
};

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoError::Kind::open_failed, "cannot open config " + path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw IoError(IoError::Kind::malformed, path + ": invalid JSON");
  RunConfig cfg;
  cfg.apply_json(j);
  return cfg;
}

}  // namespace irltg
