// Copyright 2026 The sensilogit Authors
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

#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "sensilogit/design.hpp"
#include "sensilogit/explore.hpp"
#include "sensilogit/inference.hpp"
#include "sensilogit/mixed.hpp"
#include "sensilogit/model.hpp"
#include "sensilogit/predict.hpp"
#include "sensilogit/simulate.hpp"

namespace sensilogit {

using Json = nlohmann::ordered_json;

Json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const Json& j);

/// Parameters with names, labels and standard errors, plus the covariance.
Json to_json(const FittedModel& fit);
/// Reads what to_json(FittedModel) writes. Only "spec" and "parameters"
/// (name, estimate) are required; the covariance is optional.
FittedModel fitted_from_json(const Json& j);

Json to_json(const TestResult& test);
Json to_json(const std::vector<WaldRow>& rows);
Json to_json(const ProfileCI& ci);
Json to_json(const PredictionTable& table);
Json to_json(const std::vector<RankEntry>& ranking);
Json to_json(const McaResult& mca);
Json to_json(const CAResult& ca);
Json to_json(const design::BibdLayout& layout);
Json to_json(const ConcordanceReport& report);

}  // namespace sensilogit
