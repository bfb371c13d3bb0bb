#include "perfrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec {

void Dataset::push_back(Row features, double target, int lab, Row noise_row) {
    x.push_back(std::move(features));
    y.push_back(target);
    label.push_back(lab);
    if (!noise_row.empty()) noise.push_back(std::move(noise_row));
}

void Dataset::append(const Dataset& other) {
    if (feature_names.empty()) feature_names = other.feature_names;
    if (other.feature_names != feature_names) throw Error("cannot append datasets with different features");
    const bool keep_noise = noise.size() == x.size() && other.noise.size() == other.x.size();
    x.insert(x.end(), other.x.begin(), other.x.end());
    y.insert(y.end(), other.y.begin(), other.y.end());
    label.insert(label.end(), other.label.begin(), other.label.end());
    if (keep_noise)
        noise.insert(noise.end(), other.noise.begin(), other.noise.end());
    else
        noise.clear();
}

Dataset Dataset::subset(std::size_t begin, std::size_t end) const {
    Dataset out;
    out.feature_names = feature_names;
    end = std::min(end, size());
    for (std::size_t i = begin; i < end; ++i)
        out.push_back(x[i], y[i], label[i], noise.size() == size() ? noise[i] : Row{});
    return out;
}

double Dataset::positive_rate() const {
    if (empty()) return 0.0;
    double s = 0.0;
    for (int l : label) s += l;
    return s / static_cast<double>(size());
}

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InputError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    for (auto& s : cells) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        s = a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    }
    return cells;
}

double parse_cell(const std::string& s, int line) {
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InputError("non-numeric cell '" + s + "'", line);
    return v;
}

}  // namespace

Table parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    Table t;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (t.columns.empty()) {
            t.columns = split_csv_line(line);
            continue;
        }
        const auto cells = split_csv_line(line);
        if (cells.size() != t.columns.size())
            throw InputError("expected " + std::to_string(t.columns.size()) + " cells, got " + std::to_string(cells.size()),
                             line_no);
        Row row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_cell(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw InputError("empty CSV");
    return t;
}

Table read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out.precision(17);
    for (const auto& n : data.feature_names) out << n << ",";
    out << "__y,__label\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.x[i]) out << v << ",";
        out << data.y[i] << "," << data.label[i] << "\n";
    }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
    const Table t = read_csv(path);
    const std::size_t iy = t.column("__y");
    const std::size_t il = t.column("__label");
    Dataset d;
    std::vector<std::size_t> feature_cols;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        if (c == iy || c == il) continue;
        d.feature_names.push_back(t.columns[c]);
        feature_cols.push_back(c);
    }
    for (const auto& r : t.rows) {
        Row x;
        for (std::size_t c : feature_cols) x.push_back(r[c]);
        d.push_back(std::move(x), r[iy], static_cast<int>(r[il]));
    }
    return d;
}

}  // namespace perfrec
