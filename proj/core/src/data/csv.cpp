#include "tplas/data/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tplas::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

std::string cell_ref(std::size_t row, std::size_t col) {
    return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) {
        throw DataError("CSV '" + path.string() + "' is empty");
    }
    const auto header = split(line, schema.delimiter);

    auto column_of = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw DataError("CSV '" + path.string() + "' has no column '" + name + "'");
        }
        return static_cast<std::size_t>(it - header.begin());
    };

    std::optional<std::size_t> time_col;
    if (schema.time_column) time_col = column_of(*schema.time_column);

    std::vector<std::size_t> value_cols;
    std::vector<std::string> names;
    if (schema.value_columns.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (time_col && *time_col == i) continue;
            value_cols.push_back(i);
            names.emplace_back(header[i]);
        }
    } else {
        for (const auto& name : schema.value_columns) {
            value_cols.push_back(column_of(name));
            names.push_back(name);
        }
    }
    if (value_cols.empty()) throw DataError("CSV '" + path.string() + "' has no value columns");

    std::vector<double> values;
    std::string origin;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split(line, schema.delimiter);
        if (fields.size() != header.size()) {
            throw DataError("CSV '" + path.string() + "': row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
        if (row == 1 && time_col) origin = std::string(fields[*time_col]);
        for (std::size_t j = 0; j < value_cols.size(); ++j) {
            const auto cell = fields[value_cols[j]];
            if (cell.empty()) {
                throw DataError("CSV '" + path.string() + "': missing value at " +
                                cell_ref(row, j + 1));
            }
            double v = 0.0;
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                throw DataError("CSV '" + path.string() + "': parse error at " +
                                cell_ref(row, j + 1) + ": '" + std::string(cell) +
                                "' is not a number");
            }
            if (!std::isfinite(v)) {
                throw DataError("CSV '" + path.string() + "': non-finite value at " +
                                cell_ref(row, j + 1));
            }
            values.push_back(v);
        }
    }
    if (row == 0) throw DataError("CSV '" + path.string() + "' has a header but no data rows");

    return TimeSeries(Matrix(row, value_cols.size(), std::move(values)), std::move(names),
                      schema.interval_seconds, std::move(origin));
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path, char delimiter) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write CSV '" + path.string() + "'");
    out << "step";
    for (const auto& name : series.channel_names()) out << delimiter << name;
    out << '\n';
    char buf[32];
    for (std::size_t t = 0; t < series.length(); ++t) {
        out << t;
        for (std::size_t c = 0; c < series.channels(); ++c) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, series(t, c));
            out << delimiter << std::string_view(buf, static_cast<std::size_t>(end - buf));
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing CSV '" + path.string() + "'");
}

}  // namespace tplas::data
