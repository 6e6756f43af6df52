#include "relaylab/channel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace relaylab {

namespace {

// Slice deviations below this are treated as authoring rounding noise.
constexpr double kSliceTol = 1e-9;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

RelayChannel make_relay_channel(int x_size, int x1_size, int y_size, int y1_size,
                                std::vector<double> probs) {
    if (x_size < 1 || x1_size < 1 || y_size < 1 || y1_size < 1)
        throw ValidationError("alphabet sizes must be >= 1");
    Alphabet ax{"x", x_size}, ax1{"x1", x1_size}, ay{"y", y_size}, ay1{"y1", y1_size};
    ConditionalKernel k({{"x", ax}, {"x1", ax1}}, {{"y", ay}, {"y1", ay1}}, std::move(probs));
    return RelayChannel{ax, ax1, ay, ay1, std::move(k)};
}

RelayChannel load_channel(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("channel spec is not valid JSON: ") + e.what());
    }

    int xs, x1s, ys, y1s;
    try {
        const auto& al = doc.at("alphabets");
        xs = al.at("x").get<int>();
        x1s = al.at("x1").get<int>();
        ys = al.at("y").get<int>();
        y1s = al.at("y1").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("channel spec missing alphabets: ") + e.what());
    }
    if (xs < 1 || x1s < 1 || ys < 1 || y1s < 1) throw ValidationError("alphabet sizes must be >= 1");

    const size_t ny = static_cast<size_t>(ys), ny1 = static_cast<size_t>(y1s);
    std::vector<double> probs(static_cast<size_t>(xs) * x1s * ny * ny1, -1.0);
    std::vector<bool> filled(static_cast<size_t>(xs) * x1s, false);
    if (!doc.contains("kernel") || !doc["kernel"].is_array())
        throw ParseError("channel spec missing kernel array");
    for (const auto& entry : doc["kernel"]) {
        int x, x1;
        try {
            x = entry.at("x").get<int>();
            x1 = entry.at("x1").get<int>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("kernel entry missing x/x1: ") + e.what());
        }
        if (x < 0 || x >= xs || x1 < 0 || x1 >= x1s) throw ParseError("kernel entry indexes out of range");
        const size_t slice = static_cast<size_t>(x) * x1s + static_cast<size_t>(x1);
        if (filled[slice]) throw ParseError("kernel entry repeated for (x,x1)");
        filled[slice] = true;
        const auto& rows = entry.at("rows");
        if (!rows.is_array() || rows.size() != ny) throw ParseError("kernel rows must have |Y| rows");
        double sum = 0.0;
        for (size_t y = 0; y < ny; ++y) {
            const auto& row = rows[y];
            if (!row.is_array() || row.size() != ny1) throw ParseError("kernel row must have |Y1| entries");
            for (size_t y1 = 0; y1 < ny1; ++y1) {
                double p;
                try {
                    p = row[y1].get<double>();
                } catch (const nlohmann::json::exception&) {
                    throw ParseError("kernel probability is not a number");
                }
                if (p < 0.0 || !std::isfinite(p)) throw ValidationError("negative kernel probability");
                probs[(slice * ny + y) * ny1 + y1] = p;
                sum += p;
            }
        }
        if (std::fabs(sum - 1.0) >= kSliceTol)
            throw ValidationError("kernel slice for (x=" + std::to_string(x) + ",x1=" + std::to_string(x1) +
                                  ") sums to " + std::to_string(sum));
        for (size_t i = 0; i < ny * ny1; ++i) probs[slice * ny * ny1 + i] /= sum;
    }
    for (size_t s = 0; s < filled.size(); ++s) {
        if (!filled[s]) throw ParseError("kernel entry missing for some (x,x1)");
    }
    return make_relay_channel(xs, x1s, ys, y1s, std::move(probs));
}

RelayChannel load_channel_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open channel file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_channel(ss.str());
}

std::string serialize_channel(const RelayChannel& ch) {
    std::ostringstream os;
    os << "{\n  \"alphabets\": {\"x\": " << ch.x_alpha.size << ", \"x1\": " << ch.x1_alpha.size
       << ", \"y\": " << ch.y_alpha.size << ", \"y1\": " << ch.y1_alpha.size << "},\n  \"kernel\": [\n";
    const size_t ny = static_cast<size_t>(ch.y_alpha.size), ny1 = static_cast<size_t>(ch.y1_alpha.size);
    bool first = true;
    for (int x = 0; x < ch.x_alpha.size; ++x) {
        for (int x1 = 0; x1 < ch.x1_alpha.size; ++x1) {
            if (!first) os << ",\n";
            first = false;
            const size_t row = static_cast<size_t>(x) * ch.x1_alpha.size + x1;
            os << "    {\"x\": " << x << ", \"x1\": " << x1 << ", \"rows\": [";
            for (size_t y = 0; y < ny; ++y) {
                if (y > 0) os << ", ";
                os << "[";
                for (size_t y1 = 0; y1 < ny1; ++y1) {
                    if (y1 > 0) os << ", ";
                    os << fmt17(ch.kernel.probs()[(row * ny + y) * ny1 + y1]);
                }
                os << "]";
            }
            os << "]}";
        }
    }
    os << "\n  ]\n}\n";
    return os.str();
}

std::pair<int, int> sample_output(const RelayChannel& ch, int x, int x1, Rng& rng) {
    if (x < 0 || x >= ch.x_alpha.size || x1 < 0 || x1 >= ch.x1_alpha.size)
        throw ArgumentError("channel input symbol out of range");
    const size_t row = static_cast<size_t>(x) * ch.x1_alpha.size + static_cast<size_t>(x1);
    const int joint = rng.categorical(ch.kernel.row(row));
    return {joint / ch.y1_alpha.size, joint % ch.y1_alpha.size};
}

}  // namespace relaylab
