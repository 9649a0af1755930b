#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "figac/phantom.hpp"
#include "figac/pipeline.hpp"

namespace figac::config {

using nlohmann::json;

/// Malformed configuration document. `field()` is the dotted path of the offending key.
class ConfigError : public ParameterError {
public:
    ConfigError(std::string field, const std::string& what)
        : ParameterError(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Strict readers: unknown keys and type mismatches raise ConfigError. Missing keys keep defaults.
pipeline::PipelineConfig pipeline_from_json(const json& doc);
edges::PromptSet prompts_from_json(const json& doc, const std::string& path = "prompts");
phantom::PhantomSpec phantom_from_json(const json& doc);

json to_json(const pipeline::PipelineConfig& cfg);
json to_json(const edges::PromptSet& prompts);
json to_json(const phantom::PhantomSpec& spec);
json to_json(const std::vector<levelset::Polyline>& contour);

/// Applies `key.sub=value` to a JSON document. The value is parsed as JSON when possible,
/// otherwise taken as a string.
void apply_override(json& doc, std::string_view assignment);

/// Reads a JSON file; a missing or unparsable file raises ConfigError.
json read_json_file(const std::filesystem::path& path);

/// Writes `doc` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace figac::config
