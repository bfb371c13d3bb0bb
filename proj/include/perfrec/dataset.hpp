#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace perfrec {

using Row = std::vector<double>;

/// Rows sampled from an SCM: features, target, binarized label and, when the
/// rows were generated by simulation, the full noise vector (one per node).
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<Row> x;
    std::vector<double> y;
    std::vector<int> label;
    std::vector<Row> noise;

    std::size_t size() const { return x.size(); }
    bool empty() const { return x.empty(); }
    std::size_t n_features() const { return feature_names.size(); }

    void push_back(Row features, double target, int lab, Row noise_row = {});
    void append(const Dataset& other);
    Dataset subset(std::size_t begin, std::size_t end) const;
    double positive_rate() const;
};

/// Plain numeric table with named columns (used for CSV ingestion).
struct Table {
    std::vector<std::string> columns;
    std::vector<Row> rows;
    std::size_t dropped_rows = 0;

    std::size_t column(const std::string& name) const;
};

/// Reads a comma-separated file with a header row. Cells that are empty,
/// `NA` or `NaN` become NaN; other non-numeric cells are an InputError.
Table read_csv(const std::filesystem::path& path);
Table parse_csv(const std::string& text);

/// Dataset CSV: feature columns followed by `__y` and `__label`.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace perfrec
