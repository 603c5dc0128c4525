#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The mdcc Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "mdcc/cascade.hpp"
#include "mdcc/config.hpp"
#include "mdcc/dataset.hpp"
#include "mdcc/distance.hpp"
#include "mdcc/error.hpp"
#include "mdcc/evt.hpp"
#include "mdcc/instance.hpp"
#include "mdcc/leaf.hpp"
#include "mdcc/metrics.hpp"
#include "mdcc/nn.hpp"
#include "mdcc/openmax.hpp"
#include "mdcc/protocol.hpp"
#include "mdcc/reference_set.hpp"
#include "mdcc/report.hpp"
#include "mdcc/serialize.hpp"
#include "mdcc/tensor.hpp"
#include "mdcc/training.hpp"
