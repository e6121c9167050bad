#pragma once

// Machine-readable output and the sweep spec file.
//
// JSON payloads are a single object:
//   {"schema_version":1, "command":..., "params":{...}, "results":[...]}
// with every scalar rendered as a decimal string, exact rationals as "p/q".
// CSV emits a header row then data rows; sweep output uses the fixed column
// order documented in the README. Plain is an aligned table for humans.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "toddlab/boundedness.hpp"
#include "toddlab/scalar.hpp"

namespace toddlab {

using Json = nlohmann::ordered_json;

enum class Format { Json, Csv, Plain };

inline Format parse_format(const std::string& name) {
    if (name == "json") return Format::Json;
    if (name == "csv") return Format::Csv;
    if (name == "plain") return Format::Plain;
    raise(Errc::InvalidArgument, "unknown format '" + name + "'");
}

struct OutputTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct CommandOutput {
    std::string command;
    Json params = Json::object();
    Json results = Json::array();
    OutputTable table;
};

namespace detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (const char ch : field) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

}  // namespace detail

inline std::string to_csv(const OutputTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out.push_back(',');
        out += detail::csv_escape(table.columns[i]);
    }
    out.push_back('\n');
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out.push_back(',');
            out += detail::csv_escape(row[i]);
        }
        out.push_back('\n');
    }
    return out;
}

inline std::string to_plain(const OutputTable& table) {
    // Single-cell results print bare; anything larger gets an aligned table.
    if (table.columns.size() == 1 && table.rows.size() == 1) return table.rows[0][0] + "\n";
    std::vector<std::size_t> widths(table.columns.size(), 0);
    for (std::size_t i = 0; i < table.columns.size(); ++i) widths[i] = table.columns[i].size();
    for (const auto& row : table.rows)
        for (std::size_t i = 0; i < row.size() && i < widths.size(); ++i)
            widths[i] = std::max(widths[i], row[i].size());
    std::string out;
    const auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += "  ";
            out += cells[i];
            if (i + 1 < cells.size()) out.append(widths[i] - cells[i].size(), ' ');
        }
        out.push_back('\n');
    };
    emit(table.columns);
    for (const auto& row : table.rows) emit(row);
    return out;
}

inline std::string serialize(const CommandOutput& output, Format format) {
    switch (format) {
        case Format::Json: {
            Json doc;
            doc["schema_version"] = 1;
            doc["command"] = output.command;
            doc["params"] = output.params;
            doc["results"] = output.results;
            return doc.dump() + "\n";
        }
        case Format::Csv: return to_csv(output.table);
        case Format::Plain: return to_plain(output.table);
    }
    raise(Errc::InvalidArgument, "unknown format");
}

inline void write_output(const CommandOutput& output, Format format, const std::string& path) {
    const std::string payload = serialize(output, format);
    if (path.empty()) {
        std::cout << payload;
        std::cout.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) raise(Errc::Io, "cannot open '" + path + "' for writing");
    file << payload;
    file.flush();
    if (!file) raise(Errc::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Row rendering.
// ---------------------------------------------------------------------------

inline std::string render_optional(const std::optional<Scalar>& s) { return s ? to_string(*s) : ""; }

inline constexpr const char* kSweepColumns[] = {
    "alpha", "beta",      "lambda",    "c",         "a",         "x0",          "x1",  "x2",
    "verdict", "period",  "max_value", "min_value", "steps_run", "escape_step", "seed"};

inline OutputTable sweep_table(const std::vector<SweepRow>& rows) {
    OutputTable table;
    table.columns.assign(std::begin(kSweepColumns), std::end(kSweepColumns));
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        cells.push_back(render_optional(row.map.alpha));
        cells.push_back(render_optional(row.map.beta));
        cells.push_back(render_optional(row.map.lambda));
        cells.push_back(render_optional(row.map.c));
        cells.push_back(render_optional(row.map.a));
        cells.push_back(to_string(row.initial.oldest()));
        cells.push_back(to_string(row.initial.middle()));
        cells.push_back(to_string(row.initial.newest()));
        if (row.error) {
            cells.push_back("Error");
            cells.push_back("");
            cells.push_back("");
            cells.push_back("");
            cells.push_back("");
            cells.push_back("");
        } else {
            const auto& rep = row.report;
            cells.push_back(verdict_name(rep.verdict));
            cells.push_back(rep.period ? std::to_string(*rep.period) : "");
            cells.push_back(to_string(rep.max_value));
            cells.push_back(to_string(rep.min_value));
            cells.push_back(std::to_string(rep.steps_run));
            cells.push_back(rep.escape_step ? std::to_string(*rep.escape_step) : "");
        }
        cells.push_back(std::to_string(row.seed));
        table.rows.push_back(std::move(cells));
    }
    return table;
}

inline Json sweep_row_json(const SweepRow& row) {
    Json obj;
    obj["alpha"] = render_optional(row.map.alpha);
    obj["beta"] = render_optional(row.map.beta);
    obj["lambda"] = render_optional(row.map.lambda);
    obj["c"] = render_optional(row.map.c);
    obj["a"] = render_optional(row.map.a);
    obj["x0"] = to_string(row.initial.oldest());
    obj["x1"] = to_string(row.initial.middle());
    obj["x2"] = to_string(row.initial.newest());
    if (row.error) {
        obj["error"] = *row.error;
    } else {
        obj["verdict"] = verdict_name(row.report.verdict);
        obj["period"] = row.report.period ? Json(*row.report.period) : Json(nullptr);
        obj["max_value"] = to_string(row.report.max_value);
        obj["min_value"] = to_string(row.report.min_value);
        obj["steps_run"] = row.report.steps_run;
        obj["escape_step"] = row.report.escape_step ? Json(*row.report.escape_step) : Json(nullptr);
        obj["evidence"] = row.report.evidence;
    }
    obj["seed"] = row.seed;
    return obj;
}

// ---------------------------------------------------------------------------
// Sweep spec file: `key = value` lines, `#` comments. Lists are
// comma-separated; explicit states are `x0,x1,x2` triples separated by `;`.
//
//   map       todd | general | two-param        (required)
//   c, a, alpha, beta, lambda                    (value lists per map kind)
//   precision exact | f64                        (default f64)
//   initials  random | explicit                  (default random)
//   count, low, high                             (random initials)
//   states    1,1,1 ; 2,1,1                      (explicit initials)
//   max_steps, escape, floor, tol, seed          (classification knobs)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& text) {
    std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string current;
    std::stringstream stream(text);
    while (std::getline(stream, current, sep)) {
        const std::string item = trim(current);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

inline std::vector<Scalar> parse_scalar_list(const std::string& text, Mode mode) {
    std::vector<Scalar> out;
    for (const auto& item : split(text, ',')) out.push_back(parse_scalar(item, mode));
    return out;
}

}  // namespace detail

inline State3 parse_state(const std::string& text, Mode mode) {
    const auto parts = detail::split(text, ',');
    if (parts.size() != 3)
        raise(Errc::InvalidArgument, "state must be three comma-separated values, got '" + text + "'");
    return State3(parse_scalar(parts[0], mode), parse_scalar(parts[1], mode), parse_scalar(parts[2], mode));
}

inline SweepSpec parse_sweep_spec(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            raise(Errc::InvalidSpec, "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        if (key.empty() || value.empty())
            raise(Errc::InvalidSpec, "line " + std::to_string(line_no) + ": empty key or value");
        if (kv.count(key)) raise(Errc::InvalidSpec, "duplicate key '" + key + "'");
        kv[key] = value;
    }

    const auto take = [&](const char* key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    SweepSpec spec;
    if (const auto p = take("precision")) {
        if (*p == "exact") spec.precision = Mode::Exact;
        else if (*p == "f64") spec.precision = Mode::Float64;
        else raise(Errc::InvalidSpec, "precision must be exact or f64");
    }
    const Mode mode = spec.precision;

    const auto map_kind = take("map");
    if (!map_kind) raise(Errc::InvalidSpec, "missing 'map' key");
    if (*map_kind == "todd") {
        const auto cs = take("c");
        if (!cs) raise(Errc::InvalidSpec, "todd sweep requires a 'c' list");
        for (const auto& c : detail::parse_scalar_list(*cs, mode)) spec.cells.push_back(NormalizedTodd(c));
    } else if (*map_kind == "two-param") {
        const auto cs = take("c"), as = take("a");
        if (!cs || !as) raise(Errc::InvalidSpec, "two-param sweep requires 'c' and 'a' lists");
        for (const auto& c : detail::parse_scalar_list(*cs, mode))
            for (const auto& a : detail::parse_scalar_list(*as, mode))
                spec.cells.push_back(NormalizedTwoParam(c, a));
    } else if (*map_kind == "general") {
        const auto al = take("alpha"), be = take("beta"), la = take("lambda");
        if (!al || !be || !la)
            raise(Errc::InvalidSpec, "general sweep requires 'alpha', 'beta' and 'lambda' lists");
        for (const auto& a : detail::parse_scalar_list(*al, mode))
            for (const auto& b : detail::parse_scalar_list(*be, mode))
                for (const auto& l : detail::parse_scalar_list(*la, mode))
                    spec.cells.push_back(Params(a, b, l));
    } else {
        raise(Errc::InvalidSpec, "map must be todd, two-param or general");
    }

    spec.classify = ClassifyConfig::defaults(mode);
    std::string initials = take("initials").value_or("random");
    if (initials == "random") {
        RandomInitials random;
        if (const auto v = take("count")) random.count = std::stoull(*v);
        else random.count = 10;
        if (const auto v = take("low")) random.low = detail::parse_double(*v);
        if (const auto v = take("high")) random.high = detail::parse_double(*v);
        spec.initials = random;
    } else if (initials == "explicit") {
        ExplicitInitials states;
        const auto list = take("states");
        if (!list) raise(Errc::InvalidSpec, "explicit initials require a 'states' list");
        for (const auto& item : detail::split(*list, ';')) states.states.push_back(parse_state(item, mode));
        spec.initials = states;
    } else {
        raise(Errc::InvalidSpec, "initials must be random or explicit");
    }

    if (const auto v = take("max_steps")) spec.classify.max_steps = std::stoull(*v);
    if (const auto v = take("escape")) spec.classify.escape_threshold = parse_scalar(*v, mode);
    if (const auto v = take("floor")) spec.classify.floor_threshold = parse_scalar(*v, mode);
    if (const auto v = take("tol")) spec.classify.tolerance = detail::parse_double(*v);
    if (const auto v = take("seed")) spec.seed = std::stoull(*v);

    if (!kv.empty()) raise(Errc::InvalidSpec, "unknown key '" + kv.begin()->first + "'");
    spec.validate();
    return spec;
}

}  // namespace toddlab
