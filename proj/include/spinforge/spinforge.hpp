// Copyright 2026 The Spinforge Authors
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

#pragma once

#include "spinforge/core.hpp"
#include "spinforge/spinsys.hpp"
#include "spinforge/prop.hpp"
#include "spinforge/fid.hpp"
#include "spinforge/optimize.hpp"
#include "spinforge/grape.hpp"
#include "spinforge/compulse.hpp"
#include "spinforge/dd.hpp"
#include "spinforge/simplex.hpp"
#include "spinforge/refocus.hpp"
#include "spinforge/pps.hpp"
#include "spinforge/io.hpp"
