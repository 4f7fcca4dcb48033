/*
 * Copyright 2026 The omniscale Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#ifndef OMNISCALE_CLI_HPP
#define OMNISCALE_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace omniscale {

inline constexpr int kExitOk = 0;
inline constexpr int kExitModuleError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand (analyze, train, sweep, evaluate, report). `args`
/// excludes the program name. Returns 0 on success, 2 on usage errors and 1
/// when a module reports an error.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace omniscale

#endif  // OMNISCALE_CLI_HPP
