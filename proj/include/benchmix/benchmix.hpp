// Copyright 2026 The benchmix Authors.
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

#include "benchmix/cluster.hpp"
#include "benchmix/corpus.hpp"
#include "benchmix/embedding.hpp"
#include "benchmix/error.hpp"
#include "benchmix/grading.hpp"
#include "benchmix/hardset.hpp"
#include "benchmix/http_embedding.hpp"
#include "benchmix/judge_client.hpp"
#include "benchmix/metaeval.hpp"
#include "benchmix/mixture.hpp"
#include "benchmix/versioning.hpp"
