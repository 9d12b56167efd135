#pragma once
// Command line entry points. Each cmd_* is a deterministic function of its
// RunConfig plus the input files it names: re-running with the same config
// and seed reproduces every data file byte for byte (wall-clock columns live
// only in the training log). Every command writes the fully resolved config
// next to its outputs. run_cli wraps the commands with flag parsing and the
// documented exit codes {0 success, 2 validation, 3 solver, 4 io}.

#include "trussnet/config.hpp"

namespace tn {

void cmd_gen(const RunConfig& c);
void cmd_homogenize(const RunConfig& c);
void cmd_train(const RunConfig& c);
void cmd_eval(const RunConfig& c);
void cmd_simulate(const RunConfig& c);
void cmd_export(const RunConfig& c);

int run_cli(int argc, const char* const* argv);

}  // namespace tn
