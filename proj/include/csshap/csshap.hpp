/*
 * Copyright 2026 The csshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CSSHAP_CSSHAP_HPP
#define CSSHAP_CSSHAP_HPP

#include "csshap/common.hpp"
#include "csshap/data.hpp"
#include "csshap/estimators.hpp"
#include "csshap/evaluation.hpp"
#include "csshap/experiment.hpp"
#include "csshap/models.hpp"
#include "csshap/shapley.hpp"
#include "csshap/subset_cache.hpp"
#include "csshap/value_function.hpp"

#endif  // CSSHAP_CSSHAP_HPP
