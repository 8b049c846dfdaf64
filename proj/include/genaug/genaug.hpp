// Copyright 2026 The genaug Authors.
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

#include "genaug/backend.hpp"
#include "genaug/codec.hpp"
#include "genaug/dataset.hpp"
#include "genaug/engine.hpp"
#include "genaug/geometry.hpp"
#include "genaug/harness.hpp"
#include "genaug/metrics.hpp"
#include "genaug/patch.hpp"
#include "genaug/protocol.hpp"
#include "genaug/raster.hpp"
#include "genaug/toy_backends.hpp"
#include "genaug/toy_scene.hpp"
