#pragma once

#include "tetris_cli/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>

namespace tetris::cli {

// FNV-1a over a file's bytes, printed as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

SpinDataset generate_dataset(const ExperimentConfig& config);

void cmd_generate(const ExperimentConfig& config, std::ostream& out);
// Returns the trained model; writes checkpoint and trace.
TetrisModel cmd_train(const ExperimentConfig& config, std::ostream& out);
AnalysisReport cmd_analyze(const ExperimentConfig& config, std::ostream& out);
SweepResult cmd_sweep(const ExperimentConfig& config, std::ostream& out);
// Prints the headline numbers of an existing report directory.
void cmd_report(const ExperimentConfig& config, std::ostream& out);
void cmd_pipeline(const ExperimentConfig& config, std::ostream& out);

// Entry point shared by the executable and the tests. Never throws; errors
// are printed to `err` as one "error: <kind>: <message>" line.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace tetris::cli
