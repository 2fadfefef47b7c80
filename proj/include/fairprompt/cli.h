/* Copyright 2026 The fairprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FAIRPROMPT_CLI_H_
#define FAIRPROMPT_CLI_H_

#include <ostream>
#include <string>
#include <vector>

#include "fairprompt/common.h"

namespace fairprompt {

// Process exit codes of the `fairprompt` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitBadArgs = 2,
  kExitConfig = 3,
  kExitBackend = 4,
  kExitAborted = 5,
  kExitCapability = 6,
  kExitIo = 7,
  kExitReplayMismatch = 8,
};

int exit_code_for(ErrorCode code);

// Runs the command line in-process. argv[0] is the program name.
int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err);

// Removes --out, --pool and --timestamp (and their values) so the remaining
// arguments describe the run independently of where it was written.
std::vector<std::string> replayable_args(const std::vector<std::string>& args);

// Run id: <command>[-<profession slug>]-<first 12 hex digits of a digest of
// the replayable arguments and the timestamp>.
std::string make_run_id(std::string_view command, std::string_view profession,
                        const std::vector<std::string>& args,
                        std::string_view timestamp);

}  // namespace fairprompt

#endif  // FAIRPROMPT_CLI_H_
