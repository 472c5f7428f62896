#include "betanmf/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace betanmf::io {

namespace {

std::vector<std::string> split(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delimiter)) fields.push_back(field);
    if (!line.empty() && line.back() == delimiter) fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::filesystem::path& path, const std::string& raw,
                  std::size_t row, std::size_t col) {
    const std::string cell = trim(raw);
    double value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw CsvParseError(path, row, col, "non-numeric cell '" + cell + "'");
    }
    return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path.string() + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    // a trailing newline produces no phantom row
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    return out;
}

void validate_records(const std::vector<TrajectoryRecord>& records) {
    if (records.empty()) {
        throw std::invalid_argument("export_trajectory: nothing to export");
    }
    for (const auto& r : records) {
        if (r.points.empty() || r.points.front().first != 0) {
            throw std::invalid_argument(
                "export_trajectory: trajectory must start at iteration 0");
        }
        for (std::size_t i = 1; i < r.points.size(); ++i) {
            if (r.points[i].first <= r.points[i - 1].first) {
                throw std::invalid_argument(
                    "export_trajectory: iterations must be strictly increasing");
            }
        }
        for (const std::string& s : {r.run, r.algorithm, r.beta}) {
            if (s.find(',') != std::string::npos ||
                s.find('\n') != std::string::npos) {
                throw std::invalid_argument(
                    "export_trajectory: field contains a delimiter: '" + s + "'");
            }
        }
    }
}

}  // namespace

CsvParseError::CsvParseError(const std::filesystem::path& path, std::size_t row,
                             std::size_t column, const std::string& what)
    : std::runtime_error(path.string() + ": row " + std::to_string(row) +
                         ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column) {}

std::string format_shortest(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("format_shortest failed");
    return std::string(buf, ptr);
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::vector<std::string> lines = read_lines(path);
    std::optional<std::vector<std::string>> header;
    std::size_t first_data_line = 0;
    if (options.has_header) {
        if (lines.empty()) {
            throw CsvParseError(path, 1, 1, "missing header line");
        }
        header = split(lines[0], options.delimiter);
        first_data_line = 1;
    }
    if (lines.size() <= first_data_line) {
        throw CsvParseError(path, first_data_line + 1, 1, "no data rows");
    }

    const std::size_t n_rows = lines.size() - first_data_line;
    std::size_t n_cols = 0;
    Eigen::MatrixXd m;
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t line_no = first_data_line + r + 1;
        const auto fields = split(lines[first_data_line + r], options.delimiter);
        if (r == 0) {
            n_cols = fields.size();
            if (header && header->size() != n_cols) {
                throw CsvParseError(path, line_no, 1,
                                    "header has " +
                                        std::to_string(header->size()) +
                                        " fields but data rows have " +
                                        std::to_string(n_cols));
            }
            m.resize(Eigen::Index(n_rows), Eigen::Index(n_cols));
        } else if (fields.size() != n_cols) {
            throw CsvParseError(path, line_no, 1,
                                "ragged row: expected " + std::to_string(n_cols) +
                                    " fields, got " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < n_cols; ++c) {
            m(Eigen::Index(r), Eigen::Index(c)) =
                parse_cell(path, fields[c], line_no, c + 1);
        }
    }

    NonNegMatrix<double> matrix(std::move(m), options.floor);
    const Eigen::Index floored = matrix.floored_count();
    return Dataset{std::move(matrix), std::nullopt,
                   header ? std::optional(std::move(*header)) : std::nullopt,
                   Provenance{path.string(), floored}};
}

Dataset load_sonar(const std::filesystem::path& path, double floor,
                   std::vector<std::string>* warnings) {
    constexpr std::size_t kFeatures = 60;
    std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw CsvParseError(path, 1, 1, "no data rows");

    Eigen::MatrixXd m(Eigen::Index(lines.size()), Eigen::Index(kFeatures));
    std::vector<std::string> labels;
    labels.reserve(lines.size());
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const std::size_t line_no = r + 1;
        const auto fields = split(lines[r], ',');
        if (fields.size() != kFeatures + 1) {
            throw CsvParseError(path, line_no, 1,
                                "expected 60 features plus a label, got " +
                                    std::to_string(fields.size()) + " fields");
        }
        for (std::size_t c = 0; c < kFeatures; ++c) {
            const double v = parse_cell(path, fields[c], line_no, c + 1);
            if ((v < 0.0 || v > 1.0) && warnings) {
                warnings->push_back(path.string() + ": row " +
                                    std::to_string(line_no) + ", column " +
                                    std::to_string(c + 1) + ": feature " +
                                    format_shortest(v) + " outside [0, 1]");
            }
            m(Eigen::Index(r), Eigen::Index(c)) = v;
        }
        const std::string label = trim(fields[kFeatures]);
        if (label == "R" || label == "2") {
            labels.push_back("2");
        } else if (label == "M" || label == "3") {
            labels.push_back("3");
        } else {
            throw CsvParseError(path, line_no, kFeatures + 1,
                                "unknown label token '" + label + "'");
        }
    }

    NonNegMatrix<double> matrix(std::move(m), floor);
    const Eigen::Index floored = matrix.floored_count();
    return Dataset{std::move(matrix), std::move(labels), std::nullopt,
                   Provenance{path.string(), floored}};
}

void save_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path,
              char delimiter) {
    std::ofstream out = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << delimiter;
            out << format_shortest(m(i, j));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::pair<Dataset, nmf::FactorPair<double>> gen_synthetic(
    Eigen::Index rows, Eigen::Index cols, Eigen::Index rank,
    std::uint64_t seed, std::optional<double> noise) {
    if (rows < 1 || cols < 1 || rank < 1 || rank > std::min(rows, cols)) {
        throw std::invalid_argument(
            "gen_synthetic: need 1 <= K <= min(F, N) and positive shape");
    }
    if (noise && (*noise < 0.0 || *noise >= 1.0)) {
        throw std::invalid_argument("gen_synthetic: noise amplitude must be in [0, 1)");
    }
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd W = nmf::uniform_matrix<double>(rows, rank, rng);
    Eigen::MatrixXd H = nmf::uniform_matrix<double>(rank, cols, rng);
    Eigen::MatrixXd V = W * H;
    if (noise && *noise > 0.0) {
        const double a = *noise;
        const Eigen::MatrixXd U = nmf::uniform_matrix<double>(rows, cols, rng);
        V.array() *= 1.0 - a + 2.0 * a * U.array();
    }

    std::string source = "synthetic(F=" + std::to_string(rows) +
                         ",N=" + std::to_string(cols) +
                         ",K=" + std::to_string(rank) +
                         ",seed=" + std::to_string(seed) + ")";
    NonNegMatrix<double> matrix(std::move(V));
    const Eigen::Index floored = matrix.floored_count();
    Dataset ds{std::move(matrix), std::nullopt, std::nullopt,
               Provenance{std::move(source), floored}};
    return {std::move(ds), nmf::FactorPair<double>{std::move(W), std::move(H)}};
}

void export_trajectory(const std::vector<TrajectoryRecord>& records,
                       const std::filesystem::path& path,
                       TrajectoryFormat format) {
    validate_records(records);
    std::ofstream out = open_out(path);
    if (format == TrajectoryFormat::Csv) {
        out << "run,algorithm,beta,seed,iter,objective\n";
        for (const auto& r : records) {
            for (const auto& [iter, objective] : r.points) {
                out << r.run << ',' << r.algorithm << ',' << r.beta << ','
                    << r.seed << ',' << iter << ','
                    << format_shortest(objective) << '\n';
            }
        }
    } else {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records) {
            nlohmann::json points = nlohmann::json::array();
            for (const auto& [iter, objective] : r.points) {
                points.push_back({{"iter", iter}, {"objective", objective}});
            }
            arr.push_back({{"run", r.run},
                           {"algorithm", r.algorithm},
                           {"beta", r.beta},
                           {"seed", r.seed},
                           {"points", std::move(points)}});
        }
        out << arr.dump(2) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<TrajectoryRecord> load_trajectory(const std::filesystem::path& path,
                                              TrajectoryFormat format) {
    std::vector<TrajectoryRecord> records;
    if (format == TrajectoryFormat::Csv) {
        const std::vector<std::string> lines = read_lines(path);
        if (lines.empty() || lines[0] != "run,algorithm,beta,seed,iter,objective") {
            throw CsvParseError(path, 1, 1, "missing trajectory header");
        }
        for (std::size_t r = 1; r < lines.size(); ++r) {
            const auto fields = split(lines[r], ',');
            if (fields.size() != 6) {
                throw CsvParseError(path, r + 1, 1, "expected 6 fields");
            }
            const int iter = int(parse_cell(path, fields[4], r + 1, 5));
            const double objective = parse_cell(path, fields[5], r + 1, 6);
            const auto seed = std::uint64_t(parse_cell(path, fields[3], r + 1, 4));
            if (records.empty() || records.back().run != fields[0] ||
                records.back().algorithm != fields[1] ||
                records.back().beta != fields[2] ||
                records.back().seed != seed) {
                records.push_back(
                    TrajectoryRecord{fields[0], fields[1], fields[2], seed, {}});
            }
            records.back().points.emplace_back(iter, objective);
        }
    } else {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
        nlohmann::json arr = nlohmann::json::parse(in);
        for (const auto& item : arr) {
            TrajectoryRecord r;
            r.run = item.at("run").get<std::string>();
            r.algorithm = item.at("algorithm").get<std::string>();
            r.beta = item.at("beta").get<std::string>();
            r.seed = item.at("seed").get<std::uint64_t>();
            for (const auto& p : item.at("points")) {
                r.points.emplace_back(p.at("iter").get<int>(),
                                      p.at("objective").get<double>());
            }
            records.push_back(std::move(r));
        }
    }
    return records;
}

std::vector<CurvePoint> curve_data(const std::vector<BetaParamd>& betas,
                                   double lo, double hi, int samples,
                                   double ref, CurveOrder order) {
    if (!(lo > 0.0) || !(hi > 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("curve_data: range bounds must be positive");
    }
    if (hi <= lo) throw std::invalid_argument("curve_data: empty range");
    if (samples < 2) throw std::invalid_argument("curve_data: need >= 2 samples");
    if (!(ref > 0.0) || !std::isfinite(ref)) {
        throw std::invalid_argument("curve_data: reference must be positive");
    }
    std::vector<CurvePoint> out;
    out.reserve(betas.size() * std::size_t(samples));
    for (const BetaParamd& beta : betas) {
        for (int s = 0; s < samples; ++s) {
            const double point = lo + (hi - lo) * double(s) / double(samples - 1);
            const double value = order == CurveOrder::PointFirst
                                     ? beta_divergence(point, ref, beta)
                                     : beta_divergence(ref, point, beta);
            out.push_back(CurvePoint{beta.value, beta.convention, point, value});
        }
    }
    return out;
}

void save_curve(const std::vector<CurvePoint>& points,
                const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    out << "beta,convention,point,value\n";
    for (const CurvePoint& p : points) {
        out << format_shortest(p.beta) << ',' << convention_name(p.convention)
            << ',' << format_shortest(p.point) << ','
            << format_shortest(p.value) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::string convention_name(Convention c) {
    return c == Convention::Standard ? "standard" : "flipped";
}

std::string divergence_tag(const DivergenceSpecd& d) {
    const auto tag = [](const BetaParamd& b) {
        return (b.convention == Convention::Standard ? std::string("std:")
                                                     : std::string("flip:")) +
               format_shortest(b.value);
    };
    if (const auto* beta = std::get_if<BetaParamd>(&d)) return tag(*beta);
    const auto& g = std::get<GeneratorFamilyd>(d);
    const char* family = g.family == Family::A ? "A"
                         : g.family == Family::B ? "B"
                                                 : "C";
    return std::string(family) + "@" + tag(g.beta);
}

std::string algorithm_name(nmf::Algorithm a) {
    switch (a) {
        case nmf::Algorithm::MuBregman: return "mu-bregman";
        case nmf::Algorithm::MuBeta: return "mu-beta";
        case nmf::Algorithm::Sbcd: return "sbcd";
    }
    return "unknown";
}

}  // namespace betanmf::io
