#include "stein/csv.hpp"

#include <fstream>

#include "stein/config.hpp"
#include "stein/errors.hpp"

namespace stein {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> csv_split(const std::string& line, std::size_t line_number) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            if (!current.empty())
                throw ParseError("unexpected quote inside unquoted field", line_number);
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
        ++i;
    }
    if (quoted) throw ParseError("unterminated quoted field", line_number);
    fields.push_back(std::move(current));
    return fields;
}

void write_point_set_csv(const std::filesystem::path& path, const PointSet& points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open point-set CSV for writing: " + path.string());
    for (Eigen::Index j = 0; j < points.dim(); ++j) {
        if (j > 0) out << ",";
        out << "x" << (j + 1);
    }
    out << "\n";
    for (Eigen::Index i = 0; i < points.count(); ++i) {
        for (Eigen::Index j = 0; j < points.dim(); ++j) {
            if (j > 0) out << ",";
            out << format_double(points.data(i, j), 17);
        }
        out << "\n";
    }
    if (!out) throw ConfigError("failed writing point-set CSV: " + path.string());
}

PointSet read_point_set_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open point-set CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty point-set CSV: " + path.string(), 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = csv_split(line, 1);
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] != "x" + std::to_string(j + 1))
            throw ParseError("point-set CSV header must be x1,...,xd; got column '" + header[j] +
                                 "'",
                             1);
    }
    const auto dims = static_cast<Eigen::Index>(header.size());

    std::vector<double> values;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = csv_split(line, line_number);
        if (static_cast<Eigen::Index>(fields.size()) != dims)
            throw ParseError("expected " + std::to_string(dims) + " fields, got " +
                                 std::to_string(fields.size()),
                             line_number);
        for (const auto& f : fields) {
            try {
                values.push_back(parse_double_strict(f));
            } catch (const ParseError& e) {
                throw ParseError(e.what(), line_number);
            }
        }
    }
    if (values.empty()) throw ParseError("point-set CSV has no data rows: " + path.string(), 1);

    const auto rows = static_cast<Eigen::Index>(values.size()) / dims;
    Eigen::MatrixXd m(rows, dims);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < dims; ++j) m(i, j) = values[static_cast<std::size_t>(i * dims + j)];
    PointSet points(std::move(m));
    if (!points.all_finite()) throw ParseError("point-set CSV contains non-finite values");
    return points;
}

}  // namespace stein
