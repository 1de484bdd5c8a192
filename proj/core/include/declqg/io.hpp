#pragma once

#include <string>

#include <json.hpp>

#include "declqg/lqg.hpp"
#include "declqg/static_team.hpp"

namespace declqg {

using Json = nlohmann::json;

Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j, const std::string& what);

Json team_to_json(const TeamProblem& problem);
TeamProblem team_from_json(const Json& j);

Json lqg_to_json(const LqgProblem& problem);
LqgProblem lqg_from_json(const Json& j);

Json strategy_to_json(const LinearTeamStrategy& strategy);
LinearTeamStrategy strategy_from_json(const Json& j, int n_members);

/// User-supplied static solution: {"pi": [matrix, ...]}, one per member.
std::vector<Mat> pi_from_json(const Json& j);

/// Reads and parses a JSON document; throws ParseError on I/O or syntax
/// problems.
Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& j);

}  // namespace declqg
