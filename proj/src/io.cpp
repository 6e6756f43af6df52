#include "relaylab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "relaylab/simulate.hpp"

namespace relaylab {

namespace {

nlohmann::json parse_json(const std::string& text, const char* what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string(what) + " is not valid JSON: " + e.what());
    }
}

std::vector<double> flat_matrix(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<double> out;
    for (const auto& row : j) {
        if (!row.is_array()) throw ParseError(std::string(what) + " must be an array of rows");
        for (const auto& v : row) {
            if (!v.is_number()) throw ParseError(std::string(what) + " entries must be numbers");
            out.push_back(v.get<double>());
        }
    }
    return out;
}

std::vector<double> flat_compressor(const nlohmann::json& j) {
    // compressor[y1][x1][yh]
    if (!j.is_array()) throw ParseError("compressor must be an array");
    std::vector<double> out;
    for (const auto& plane : j) {
        if (!plane.is_array()) throw ParseError("compressor must be nested [y1][x1][yh]");
        for (const auto& row : plane) {
            if (!row.is_array()) throw ParseError("compressor must be nested [y1][x1][yh]");
            for (const auto& v : row) {
                if (!v.is_number()) throw ParseError("compressor entries must be numbers");
                out.push_back(v.get<double>());
            }
        }
    }
    return out;
}

std::vector<double> flat_vector(const nlohmann::json& j, const char* what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ParseError(std::string(what) + " entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

int yhat_size_of(const nlohmann::json& doc) {
    if (!doc.contains("yhat_size") || !doc["yhat_size"].is_number_integer())
        throw ParseError("params document needs an integer yhat_size");
    return doc["yhat_size"].get<int>();
}

std::string dump_rows(const std::vector<double>& v, size_t ncols) {
    std::ostringstream os;
    os << "[";
    for (size_t r = 0; r * ncols < v.size(); ++r) {
        if (r > 0) os << ", ";
        os << "[";
        for (size_t c = 0; c < ncols; ++c) {
            if (c > 0) os << ", ";
            os << format_double(v[r * ncols + c]);
        }
        os << "]";
    }
    os << "]";
    return os.str();
}

std::string dump_compressor(std::span<const double> v, size_t nx1, size_t nyh) {
    std::ostringstream os;
    os << "[";
    const size_t plane = nx1 * nyh;
    for (size_t y1 = 0; y1 * plane < v.size(); ++y1) {
        if (y1 > 0) os << ", ";
        os << "[";
        for (size_t x1 = 0; x1 < nx1; ++x1) {
            if (x1 > 0) os << ", ";
            os << "[";
            for (size_t yh = 0; yh < nyh; ++yh) {
                if (yh > 0) os << ", ";
                os << format_double(v[y1 * plane + x1 * nyh + yh]);
            }
            os << "]";
        }
        os << "]";
    }
    os << "]";
    return os.str();
}

}  // namespace

bool params_text_is_caf(const std::string& text) {
    const nlohmann::json doc = parse_json(text, "params document");
    return doc.contains("input_law");
}

NewSchemeParams load_scheme_params(const RelayChannel& ch, const std::string& text) {
    const nlohmann::json doc = parse_json(text, "params document");
    for (const char* key : {"input_chain", "relay_map", "compressor"}) {
        if (!doc.contains(key)) throw ParseError(std::string("params document missing ") + key);
    }
    return make_new_scheme_params(ch, yhat_size_of(doc), flat_matrix(doc["input_chain"], "input_chain"),
                                  flat_matrix(doc["relay_map"], "relay_map"),
                                  flat_compressor(doc["compressor"]));
}

CafParams load_caf_params(const RelayChannel& ch, const std::string& text) {
    const nlohmann::json doc = parse_json(text, "params document");
    for (const char* key : {"input_law", "relay_law", "compressor"}) {
        if (!doc.contains(key)) throw ParseError(std::string("params document missing ") + key);
    }
    return make_caf_params(ch, yhat_size_of(doc), flat_vector(doc["input_law"], "input_law"),
                           flat_vector(doc["relay_law"], "relay_law"), flat_compressor(doc["compressor"]));
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

NewSchemeParams load_scheme_params_file(const RelayChannel& ch, const std::string& path) {
    return load_scheme_params(ch, read_file(path));
}

CafParams load_caf_params_file(const RelayChannel& ch, const std::string& path) {
    return load_caf_params(ch, read_file(path));
}

std::string serialize_scheme_params(const NewSchemeParams& p) {
    std::ostringstream os;
    const size_t nx = static_cast<size_t>(p.input_chain.out()[0].alpha.size);
    const size_t nx1 = static_cast<size_t>(p.relay_map.out()[0].alpha.size);
    const size_t nyh = static_cast<size_t>(p.yhat.size);
    os << "{\n  \"yhat_size\": " << p.yhat.size << ",\n  \"input_chain\": "
       << dump_rows({p.input_chain.probs().begin(), p.input_chain.probs().end()}, nx)
       << ",\n  \"relay_map\": " << dump_rows({p.relay_map.probs().begin(), p.relay_map.probs().end()}, nx1)
       << ",\n  \"compressor\": " << dump_compressor(p.compressor.probs(), nx1, nyh) << "\n}\n";
    return os.str();
}

std::string serialize_caf_params(const CafParams& p) {
    std::ostringstream os;
    const size_t nx1 = static_cast<size_t>(p.compressor.given()[1].alpha.size);
    const size_t nyh = static_cast<size_t>(p.yhat.size);
    os << "{\n  \"yhat_size\": " << p.yhat.size << ",\n  \"input_law\": [";
    for (size_t i = 0; i < p.input_law.size(); ++i)
        os << (i ? ", " : "") << format_double(p.input_law[i]);
    os << "],\n  \"relay_law\": [";
    for (size_t i = 0; i < p.relay_law.size(); ++i)
        os << (i ? ", " : "") << format_double(p.relay_law[i]);
    os << "],\n  \"compressor\": " << dump_compressor(p.compressor.probs(), nx1, nyh) << "\n}\n";
    return os.str();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue val) {
    auto& obj = std::get<Object>(v_);
    obj.emplace_back(key, std::move(val));
    return *this;
}

JsonValue& JsonValue::push(JsonValue val) {
    std::get<Array>(v_).push_back(std::move(val));
    return *this;
}

namespace {

void dump_string(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

}  // namespace

void JsonValue::dump_to(std::string& out, int indent, int depth) const {
    const std::string pad = indent > 0 ? std::string(static_cast<size_t>(indent * (depth + 1)), ' ') : "";
    const std::string padc = indent > 0 ? std::string(static_cast<size_t>(indent * depth), ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    if (std::holds_alternative<std::nullptr_t>(v_)) {
        out += "null";
    } else if (const bool* b = std::get_if<bool>(&v_)) {
        out += *b ? "true" : "false";
    } else if (const int64_t* i = std::get_if<int64_t>(&v_)) {
        out += std::to_string(*i);
    } else if (const double* d = std::get_if<double>(&v_)) {
        out += format_double(*d);
    } else if (const std::string* s = std::get_if<std::string>(&v_)) {
        dump_string(out, *s);
    } else if (const Array* a = std::get_if<Array>(&v_)) {
        if (a->empty()) {
            out += "[]";
            return;
        }
        out += '[';
        out += nl;
        for (size_t i = 0; i < a->size(); ++i) {
            out += pad;
            (*a)[i].dump_to(out, indent, depth + 1);
            if (i + 1 < a->size()) out += ',';
            out += nl;
        }
        out += padc;
        out += ']';
    } else if (const Object* o = std::get_if<Object>(&v_)) {
        if (o->empty()) {
            out += "{}";
            return;
        }
        out += '{';
        out += nl;
        for (size_t i = 0; i < o->size(); ++i) {
            out += pad;
            dump_string(out, (*o)[i].first);
            out += indent > 0 ? ": " : ":";
            (*o)[i].second.dump_to(out, indent, depth + 1);
            if (i + 1 < o->size()) out += ',';
            out += nl;
        }
        out += padc;
        out += '}';
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    dump_to(out, indent, 0);
    return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string hash_file(const std::string& path) { return fnv1a64_hex(read_file(path)); }

JsonValue manifest_json(const std::string& command, const std::vector<ManifestInput>& inputs,
                        uint64_t seed, const std::vector<std::string>& outputs) {
    JsonValue m = JsonValue::object();
    m.set("command", command);
    JsonValue ins = JsonValue::array();
    for (const auto& in : inputs) {
        JsonValue e = JsonValue::object();
        e.set("path", in.path);
        e.set("fnv1a64", in.fnv1a64);
        ins.push(std::move(e));
    }
    m.set("inputs", std::move(ins));
    m.set("seed", static_cast<int64_t>(seed));
    m.set("tool_version", kToolVersion);
    JsonValue outs = JsonValue::array();
    for (const auto& o : outputs) outs.push(o);
    m.set("outputs", std::move(outs));
    return m;
}

JsonValue report_envelope(const std::string& command, const std::string& units) {
    JsonValue root = JsonValue::object();
    root.set("schema", 1);
    root.set("tool", "relaylab");
    root.set("tool_version", kToolVersion);
    root.set("command", command);
    root.set("units", units);
    return root;
}

JsonValue rate_report_json(const RateReport& r, double s) {
    JsonValue j = JsonValue::object();
    j.set("scheme", "new");
    j.set("rate_bound_a", r.rate_bound_a * s);
    j.set("feasibility_gap_b", r.feasibility_gap_b * s);
    j.set("rate_bound_c", r.rate_bound_c * s);
    j.set("achievable_rate", r.achievable_rate * s);
    j.set("feasible", r.feasible);
    return j;
}

JsonValue caf_report_json(const CafReport& r, double s) {
    JsonValue j = JsonValue::object();
    j.set("scheme", "caf");
    j.set("form", caf_form_name(r.form));
    j.set("achievable_rate", r.achievable_rate * s);
    j.set("feasible", r.feasible);
    JsonValue gaps = JsonValue::array();
    for (const auto& [id, slack] : r.condition_gaps) {
        JsonValue g = JsonValue::object();
        g.set("id", id);
        g.set("slack", slack * s);
        gaps.push(std::move(g));
    }
    j.set("condition_gaps", std::move(gaps));
    return j;
}

JsonValue sim_result_json(const SimResult& r, double s) {
    JsonValue j = JsonValue::object();
    j.set("error_count", r.error_count);
    j.set("trials", r.trials);
    j.set("p_e_hat", r.p_e_hat);
    j.set("effective_rate", r.effective_rate * s);
    JsonValue w = JsonValue::array();
    w.push(r.wilson_lo);
    w.push(r.wilson_hi);
    j.set("wilson_interval", std::move(w));
    return j;
}

void append_csv_line(const std::string& path, const std::string& header, const std::string& line) {
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    std::ofstream out(path, std::ios::app);
    if (!out) throw ValidationError("cannot open CSV path: " + path);
    if (fresh) out << header << "\n";
    out << line << "\n";
}

}  // namespace relaylab
