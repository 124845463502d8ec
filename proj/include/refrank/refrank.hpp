/*
 * Copyright 2026 The refrank Authors.
 *
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

#ifndef REFRANK_REFRANK_HPP_
#define REFRANK_REFRANK_HPP_

#include "refrank/aggregate.hpp"
#include "refrank/config.hpp"
#include "refrank/corpus.hpp"
#include "refrank/embed.hpp"
#include "refrank/error.hpp"
#include "refrank/eval.hpp"
#include "refrank/gradcheck.hpp"
#include "refrank/model.hpp"
#include "refrank/pipeline.hpp"
#include "refrank/retrieve.hpp"
#include "refrank/synth.hpp"
#include "refrank/textprep.hpp"
#include "refrank/train.hpp"

#endif  // REFRANK_REFRANK_HPP_
