/*
 * Copyright 2026 The nodedp Authors
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

#ifndef NODEDP_CLI_H_
#define NODEDP_CLI_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace nodedp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIntegrity = 3;

// Entry point for the `nodedp` tool. args[0] is the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// 64-bit FNV-1a of a file's bytes, as 16 lowercase hex digits.
std::string FileDigest(const std::string& path);

}  // namespace nodedp

#endif  // NODEDP_CLI_H_
