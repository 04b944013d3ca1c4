/*
 * Copyright 2026 The rcbev Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rcbev/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint32_t> seed;
  int workers = 0;  // 0 = all cores
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--workers", args.workers, "worker threads (default: all cores)");
}

rcbev::PipelineConfig load_config(const CommonArgs& args) {
  rcbev::PipelineConfig config = rcbev::PipelineConfig::from_json_file(args.config_path);
  if (args.seed) config.seed = *args.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"radar-camera BEV fusion pipeline"};
  app.require_subcommand(1);

  CommonArgs preprocess_args;
  std::string preprocess_dataset, preprocess_out;
  CLI::App* preprocess = app.add_subcommand(
      "preprocess", "fuse radar and camera BEV features and render target maps");
  add_common(preprocess, preprocess_args);
  preprocess->add_option("dataset", preprocess_dataset, "dataset manifest (JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  preprocess->add_option("--out", preprocess_out, "output directory")->required();

  CommonArgs eval_args;
  std::string eval_predictions, eval_gt, eval_out;
  CLI::App* eval = app.add_subcommand("eval", "run a detection evaluation protocol");
  add_common(eval, eval_args);
  eval->add_option("predictions", eval_predictions, "predictions manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("ground_truth", eval_gt, "ground-truth manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--out", eval_out, "output directory")->required();

  CommonArgs cbgs_args;
  std::string cbgs_dataset, cbgs_out;
  CLI::App* cbgs = app.add_subcommand("cbgs", "class-balanced frame resampling");
  add_common(cbgs, cbgs_args);
  cbgs->add_option("dataset", cbgs_dataset, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  cbgs->add_option("--out", cbgs_out, "output index list")->required();

  CommonArgs targets_args;
  std::string targets_dataset, targets_out;
  CLI::App* targets = app.add_subcommand("render-targets", "render detection target maps");
  add_common(targets, targets_args);
  targets->add_option("dataset", targets_dataset, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  targets->add_option("--out", targets_out, "output directory")->required();

  CommonArgs decode_args;
  std::string decode_dataset, decode_tensors, decode_out;
  CLI::App* decode = app.add_subcommand("decode", "decode head outputs into a predictions manifest");
  add_common(decode, decode_args);
  decode->add_option("dataset", decode_dataset, "manifest naming the frames to decode")
      ->required()
      ->check(CLI::ExistingFile);
  decode->add_option("--tensors", decode_tensors, "directory with head output tensors")
      ->required()
      ->check(CLI::ExistingDirectory);
  decode->add_option("--out", decode_out, "output predictions manifest")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (preprocess->parsed()) {
      rcbev::run_preprocess(load_config(preprocess_args), preprocess_dataset, preprocess_out,
                            preprocess_args.workers, std::cout);
    } else if (eval->parsed()) {
      rcbev::run_eval(load_config(eval_args), eval_predictions, eval_gt, eval_out, std::cout);
    } else if (cbgs->parsed()) {
      rcbev::run_cbgs(load_config(cbgs_args), cbgs_dataset, cbgs_out, std::cout);
    } else if (targets->parsed()) {
      rcbev::run_render_targets(load_config(targets_args), targets_dataset, targets_out,
                                targets_args.workers, std::cout);
    } else if (decode->parsed()) {
      rcbev::run_decode(load_config(decode_args), decode_dataset, decode_tensors, decode_out,
                        decode_args.workers, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
