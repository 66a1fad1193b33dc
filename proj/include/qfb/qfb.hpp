// Copyright 2026 The qfb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef QFB_QFB_HPP
#define QFB_QFB_HPP

#include "qfb/assembler.hpp"
#include "qfb/backend.hpp"
#include "qfb/config.hpp"
#include "qfb/engine.hpp"
#include "qfb/error.hpp"
#include "qfb/experiments.hpp"
#include "qfb/isa.hpp"
#include "qfb/physics.hpp"
#include "qfb/readout.hpp"
#include "qfb/report.hpp"
#include "qfb/rng.hpp"
#include "qfb/tomography.hpp"

#endif  // QFB_QFB_HPP
