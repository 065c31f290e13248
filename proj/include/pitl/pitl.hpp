// Copyright 2026 The PITL Attack Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PITL_PITL_HPP_
#define PITL_PITL_HPP_

#include "pitl/attack.hpp"
#include "pitl/errors.hpp"
#include "pitl/image.hpp"
#include "pitl/metrics.hpp"
#include "pitl/netpbm.hpp"
#include "pitl/presets.hpp"
#include "pitl/scene.hpp"
#include "pitl/sep_cmaes.hpp"
#include "pitl/victim.hpp"

#endif  // PITL_PITL_HPP_
