#pragma once

namespace revflow {

/// Entry point of the `revflow` command-line tool. Returns the process exit
/// code; never throws.
int run_cli(int argc, char** argv);

}  // namespace revflow
