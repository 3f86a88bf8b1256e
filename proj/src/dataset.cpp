#include "snfit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

namespace snfit {

namespace {

std::string trim(std::string_view s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string_view::npos) return {};
    auto end = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(begin, end - begin + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
        throw ParseError("invalid " + column + " '" + text + "' at row " + std::to_string(row));
    }
    return value;
}

}  // namespace

Status parse_status(std::string_view token) {
    auto t = lower(trim(token));
    if (t == "failure") return Status::Failure;
    if (t == "runout") return Status::Runout;
    throw ParseError("unknown status token '" + std::string(token) + "'");
}

std::string to_string(Status s) { return s == Status::Failure ? "failure" : "runout"; }

std::vector<Observation> load_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    std::optional<std::vector<std::string>> header;
    while (!header && std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        for (auto& f : fields) f = lower(f);
        header = std::move(fields);
    }
    if (!header) throw ParseError("empty input: missing header row");

    auto column_index = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = std::find(header->begin(), header->end(), name);
        if (it == header->end()) return std::nullopt;
        return static_cast<std::size_t>(it - header->begin());
    };
    auto require = [&](const std::string& name) {
        auto idx = column_index(name);
        if (!idx) throw ParseError("missing column '" + name + "' in header (row " + std::to_string(row) + ")");
        return *idx;
    };
    const std::size_t i_stress = require("stress");
    const std::size_t i_cycles = require("cycles");
    const std::size_t i_status = require("status");
    const auto i_count = column_index("count");

    std::vector<Observation> out;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        auto field = [&](std::size_t idx, const std::string& name) -> const std::string& {
            if (idx >= fields.size() || fields[idx].empty()) {
                throw ParseError("missing " + name + " at row " + std::to_string(row));
            }
            return fields[idx];
        };

        Observation obs;
        obs.stress = parse_number(field(i_stress, "stress"), row, "stress");
        if (!(obs.stress > 0.0)) throw ParseError("non-positive stress at row " + std::to_string(row));
        obs.cycles = parse_number(field(i_cycles, "cycles"), row, "cycles");
        if (!(obs.cycles > 0.0)) throw ParseError("non-positive cycles at row " + std::to_string(row));
        try {
            obs.status = parse_status(field(i_status, "status"));
        } catch (const ParseError&) {
            throw ParseError("unknown status '" + fields[i_status] + "' at row " + std::to_string(row) +
                             " (column status)");
        }

        long count = 1;
        if (i_count && *i_count < fields.size() && !fields[*i_count].empty()) {
            double c = parse_number(fields[*i_count], row, "count");
            if (c < 1.0 || c != std::floor(c)) {
                throw ParseError("count must be a positive integer at row " + std::to_string(row));
            }
            count = static_cast<long>(c);
        }
        for (long k = 0; k < count; ++k) out.push_back(obs);
    }
    return out;
}

std::vector<Observation> load_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file '" + path + "'");
    return load_csv(in);
}

DataAnchors compute_anchors(std::span<const Observation> observations) {
    DataAnchors a;
    bool any_failure = false;
    a.n_low = std::numeric_limits<double>::infinity();
    a.s_low_fail = std::numeric_limits<double>::infinity();
    for (const auto& o : observations) {
        a.n_low = std::min(a.n_low, o.cycles);
        if (o.failed()) {
            if (!any_failure) {
                a.n_high = o.cycles;
                a.s_high_fail = o.stress;
            }
            any_failure = true;
            a.n_high = std::max(a.n_high, o.cycles);
            a.s_low_fail = std::min(a.s_low_fail, o.stress);
            a.s_high_fail = std::max(a.s_high_fail, o.stress);
        }
    }
    if (!any_failure) throw EstimabilityError("no failures: anchors undefined");
    a.n_mid = std::exp(0.5 * (std::log(a.n_low) + std::log(a.n_high)));
    return a;
}

SNDataset::SNDataset(std::vector<Observation> scaled, ScalingMeta scaling)
    : observations_(std::move(scaled)), scaling_(scaling), anchors_(compute_anchors(observations_)) {}

std::size_t SNDataset::failure_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(observations_.begin(), observations_.end(), [](const Observation& o) { return o.failed(); }));
}

std::vector<Observation> SNDataset::unscaled() const {
    std::vector<Observation> out(observations_.begin(), observations_.end());
    for (auto& o : out) {
        o.stress *= scaling_.s_max;
        o.cycles *= scaling_.n_max;
    }
    return out;
}

SNDataset scale(std::span<const Observation> raw) {
    if (raw.empty()) throw EstimabilityError("empty dataset");
    ScalingMeta meta{0.0, 0.0};
    for (const auto& o : raw) {
        if (!(o.stress > 0.0) || !(o.cycles > 0.0) || !std::isfinite(o.stress) || !std::isfinite(o.cycles)) {
            throw DomainError("observations must have positive finite stress and cycles");
        }
        meta.s_max = std::max(meta.s_max, o.stress);
        meta.n_max = std::max(meta.n_max, o.cycles);
    }
    std::vector<Observation> scaled(raw.begin(), raw.end());
    for (auto& o : scaled) {
        o.stress /= meta.s_max;
        o.cycles /= meta.n_max;
    }
    return SNDataset(std::move(scaled), meta);
}

}  // namespace snfit
