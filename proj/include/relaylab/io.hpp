#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "relaylab/rates.hpp"

namespace relaylab {

inline constexpr const char* kToolVersion = "0.1.0";

// Scheme-parameter documents. A file with input_chain/relay_map holds
// new-scheme parameters; one with input_law/relay_law holds CAF parameters.
NewSchemeParams load_scheme_params(const RelayChannel& ch, const std::string& text);
NewSchemeParams load_scheme_params_file(const RelayChannel& ch, const std::string& path);
CafParams load_caf_params(const RelayChannel& ch, const std::string& text);
CafParams load_caf_params_file(const RelayChannel& ch, const std::string& path);
bool params_text_is_caf(const std::string& text);

std::string serialize_scheme_params(const NewSchemeParams& p);
std::string serialize_caf_params(const CafParams& p);

// Minimal JSON value for building reports: emission uses %.17g for doubles,
// so identical inputs reproduce byte-identical documents.
class JsonValue {
  public:
    using Array = std::vector<JsonValue>;
    // Object preserving insertion order.
    using Object = std::vector<std::pair<std::string, JsonValue>>;

    JsonValue() : v_(nullptr) {}
    JsonValue(std::nullptr_t) : v_(nullptr) {}
    JsonValue(bool b) : v_(b) {}
    JsonValue(int i) : v_(static_cast<int64_t>(i)) {}
    JsonValue(int64_t i) : v_(i) {}
    JsonValue(double d) : v_(d) {}
    JsonValue(const char* s) : v_(std::string(s)) {}
    JsonValue(std::string s) : v_(std::move(s)) {}
    JsonValue(Array a) : v_(std::move(a)) {}
    JsonValue(Object o) : v_(std::move(o)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }

    JsonValue& set(const std::string& key, JsonValue val);
    JsonValue& push(JsonValue val);

    std::string dump(int indent = 0) const;

  private:
    void dump_to(std::string& out, int indent, int depth) const;
    std::variant<std::nullptr_t, bool, int64_t, double, std::string, Array, Object> v_;
};

std::string format_double(double v);  // %.17g

// FNV-1a 64-bit over raw bytes, hex encoded; used for input hashes.
std::string fnv1a64_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

struct ManifestInput {
    std::string path;
    std::string fnv1a64;
};

JsonValue manifest_json(const std::string& command, const std::vector<ManifestInput>& inputs,
                        uint64_t seed, const std::vector<std::string>& outputs);

// Report scaffolding shared by every subcommand.
JsonValue report_envelope(const std::string& command, const std::string& units);

JsonValue rate_report_json(const RateReport& r, double unit_scale);
JsonValue caf_report_json(const CafReport& r, double unit_scale);
JsonValue sim_result_json(const struct SimResult& r, double unit_scale);

void append_csv_line(const std::string& path, const std::string& header, const std::string& line);

std::string read_file(const std::string& path);

}  // namespace relaylab
