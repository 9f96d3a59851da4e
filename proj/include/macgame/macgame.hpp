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


#ifndef MACGAME_MACGAME_HPP
#define MACGAME_MACGAME_HPP

#include "capacity.hpp"
#include "channel.hpp"
#include "decoding.hpp"
#include "error.hpp"
#include "format.hpp"
#include "parallel.hpp"
#include "policy.hpp"
#include "projected_gradient.hpp"
#include "repeated.hpp"
#include "report.hpp"
#include "scalar_game.hpp"
#include "stackelberg.hpp"
#include "vector.hpp"
#include "waterfill.hpp"

#endif
