// SPDX-License-Identifier: Apache-2.0
//
// macgame: equilibria of power/rate allocation games on fading multiple-access channels
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MACGAME_ERROR_HPP
#define MACGAME_ERROR_HPP

#include <stdexcept>
#include <string>

namespace macgame {

// Precondition violations and malformed inputs. Solver non-convergence is not an
// error: it is reported through the `converged` flag of the returned report.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised while reading a scenario file; `key()` names the offending entry.
class config_error : public error {
public:
    config_error(std::string key, const std::string& what)
        : error("config key '" + key + "': " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw error(message);
}

} // namespace macgame

#endif
