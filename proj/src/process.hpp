/* Copyright 2026 The nuclass Authors. All Rights Reserved.

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

#ifndef NUCLASS_PROCESS_HPP_
#define NUCLASS_PROCESS_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nuclass {

// Shell-style rendering of an argument vector, for diagnostics and manifests.
std::string command_line(const std::vector<std::string>& argv);

// Runs argv[0] (searched on PATH) without a shell. stdout is handed to
// `on_stdout` in chunks if given, otherwise discarded; stderr is captured
// and included in the error. Throws EnvironmentError if the program cannot
// be started and IoError if it exits nonzero.
void run_process(const std::vector<std::string>& argv,
                 const std::function<void(std::span<const unsigned char>)>& on_stdout = {},
                 std::string* stderr_text = nullptr);

}  // namespace nuclass

#endif  // NUCLASS_PROCESS_HPP_
