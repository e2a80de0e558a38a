#pragma once

#include <string>

#include "json.hpp"

#include "disj/dist.hpp"
#include "disj/harness.hpp"
#include "disj/protocol.hpp"
#include "disj/rectangle.hpp"
#include "disj/substate.hpp"

namespace disj {

// Distributions: {"n": int, "support": [{"set": int-or-"{1,3}", "w": float}]}
// Joints:        {"n": int, "support": [{"a": ..., "b": ..., "w": float}]}
nlohmann::json dist_to_json(const Dist& d);
Dist dist_from_json(const nlohmann::json& j);

nlohmann::json joint_to_json(const JointDist& j);
JointDist joint_from_json(const nlohmann::json& j);

GeneratorSpec generator_from_json(const nlohmann::json& j);
bool generator_is_joint(const GeneratorSpec& spec);

nlohmann::json witness_to_json(const RectangleWitness& w);
nlohmann::json witness_report_to_json(const WitnessReport& r);
nlohmann::json info_to_json(const InfoReport& r);
nlohmann::json truncation_to_json(const TruncationResult& t, bool include_nu = true);
nlohmann::json eval_report_to_json(const EvalReport& r);
nlohmann::json run_outcome_to_json(const RunOutcome& o);

ExperimentConfig config_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace disj
