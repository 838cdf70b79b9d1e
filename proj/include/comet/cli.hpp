#pragma once

namespace comet {

// Command-line entry point (subcommands: synth | train | sample | eval).
// Exit codes: 0 success, 1 usage or invalid input, 2 missing input file,
// 3 corrupt model file, 4 shape mismatch, 5 numerical failure.
int cli_main(int argc, const char* const* argv);

}  // namespace comet
