// SPDX-License-Identifier: Apache-2.0
// Writes the synthetic separable dataset used by the tests and the shipped data/toy set.
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sarc/ablation.hpp"
#include "sarc/dataset.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic separable sarclab dataset"};
  sarc::ToyConfig cfg;
  std::string out;
  app.add_option("--instances", cfg.instances, "Number of instances")->capture_default_str();
  app.add_option("--dim", cfg.dim, "Embedding width D")->capture_default_str();
  app.add_option("--num-comet", cfg.num_comet, "Commonsense rows M")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  app.add_option("--comet-signal", cfg.comet_signal, "Label signal carried by the commonsense rows")
      ->capture_default_str();
  app.add_option("--margin", cfg.margin, "Minimum |projection| of row 0")->capture_default_str();
  app.add_option("out", out, "Output dataset directory")->required();
  CLI11_PARSE(app, argc, argv);

  try {
    const sarc::Dataset d = sarc::make_toy_dataset(cfg);
    sarc::write_dataset(d, out);
    std::cout << "wrote " << d.size() << " instances to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "make_toy: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
