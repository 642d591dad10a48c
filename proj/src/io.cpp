#include "qtraj/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace qtraj::io {

namespace {

[[noreturn]] void field_error(const std::string& where, const std::string& what) {
    throw ParseError("field " + (where.empty() ? std::string("/") : where) + ": " + what);
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_and_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::ostringstream os;
        os << "JSON syntax error at line " << line << ", column " << column << ": " << e.what();
        throw ParseError(os.str());
    }
}

Complex complex_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        field_error(where, "expected a complex number [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<ComplexMatrix> matrix_list(const json& root, const std::string& key, Index rows, Index cols) {
    const std::string where = "/" + key;
    if (!root.contains(key)) field_error(where, "missing");
    const json& list = root.at(key);
    if (!list.is_array()) field_error(where, "expected an array of matrices");
    std::vector<ComplexMatrix> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(matrix_from_json(list[i], where + "/" + std::to_string(i), rows, cols));
    }
    return out;
}

} // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json matrix_to_json(const ComplexMatrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) {
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

ComplexMatrix matrix_from_json(const json& j, const std::string& where, Index rows, Index cols) {
    if (!j.is_array() || j.empty()) field_error(where, "expected a non-empty array of rows");
    const auto n_rows = static_cast<Index>(j.size());
    if (rows >= 0 && n_rows != rows) {
        field_error(where, "expected " + std::to_string(rows) + " rows, found " + std::to_string(n_rows));
    }
    if (!j[0].is_array()) field_error(where + "/0", "expected a row array");
    const auto n_cols = static_cast<Index>(j[0].size());
    if (cols >= 0 && n_cols != cols) {
        field_error(where, "expected " + std::to_string(cols) + " columns, found " + std::to_string(n_cols));
    }
    ComplexMatrix m(n_rows, n_cols);
    for (Index r = 0; r < n_rows; ++r) {
        const std::string row_where = where + "/" + std::to_string(r);
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n_cols) {
            field_error(row_where, "ragged row (expected " + std::to_string(n_cols) + " entries)");
        }
        for (Index c = 0; c < n_cols; ++c) {
            m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)], row_where + "/" + std::to_string(c));
        }
    }
    return m;
}

ModelFile parse_model(const std::string& text) {
    const json root = parse_json(text);
    if (!root.is_object()) field_error("", "expected a JSON object");
    if (!root.contains("dim") || !root["dim"].is_number_integer() || root["dim"].get<long long>() <= 0) {
        field_error("/dim", "expected a positive integer");
    }
    const auto d = static_cast<Index>(root["dim"].get<long long>());

    if (root.contains("kraus_operators")) {
        if (root.contains("hamiltonian") || root.contains("jump_operators")) {
            field_error("/kraus_operators", "cannot be combined with hamiltonian/jump_operators");
        }
        return discrete::KrausModel{matrix_list(root, "kraus_operators", d, d)};
    }

    LindbladModelFile file;
    if (!root.contains("hamiltonian")) field_error("/hamiltonian", "missing");
    file.model.hamiltonian = matrix_from_json(root["hamiltonian"], "/hamiltonian", d, d);
    file.model.jump_operators = matrix_list(root, "jump_operators", d, d);

    if (root.contains("decomposition")) {
        const json& dec = root["decomposition"];
        if (!dec.is_object()) field_error("/decomposition", "expected an object with L0 and J");
        if (!dec.contains("L0")) field_error("/decomposition/L0", "missing");
        model::ExplicitSuperoperators explicit_dec;
        explicit_dec.L0 = Superoperator(d, matrix_from_json(dec["L0"], "/decomposition/L0", d * d, d * d));
        if (!dec.contains("J") || !dec["J"].is_array()) field_error("/decomposition/J", "expected an array");
        for (std::size_t i = 0; i < dec["J"].size(); ++i) {
            const std::string where = "/decomposition/J/" + std::to_string(i);
            explicit_dec.jumps.emplace_back(d, matrix_from_json(dec["J"][i], where, d * d, d * d));
        }
        file.decomposition = std::move(explicit_dec);
    }
    return file;
}

ModelFile load_model(const std::filesystem::path& path) {
    try {
        return parse_model(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

DensityMatrix parse_state(const std::string& spec, Index d) {
    if (spec.rfind("basis:", 0) == 0) {
        const std::string digits = spec.substr(6);
        std::size_t used = 0;
        long long n = -1;
        try {
            n = std::stoll(digits, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != digits.size() || n < 0 || n >= d) {
            throw ParseError("theta0 '" + spec + "': basis index must be an integer in [0, " +
                             std::to_string(d - 1) + "]");
        }
        return DensityMatrix::pure(d, static_cast<Index>(n));
    }
    if (spec == "plus") {
        if (d != 2) throw ParseError("theta0 'plus' is defined for d = 2 only");
        return DensityMatrix(ComplexMatrix::Constant(2, 2, 0.5));
    }
    if (spec == "mixed") {
        return DensityMatrix::maximally_mixed(d);
    }
    if (!spec.empty() && spec.front() == '[') {
        const ComplexMatrix m = matrix_from_json(parse_json(spec), "theta0", d, d);
        try {
            return DensityMatrix(m);
        } catch (const InvariantError& e) {
            throw ParseError(std::string("theta0 literal is not a density matrix: ") + e.what());
        }
    }
    throw ParseError("theta0 '" + spec + "': expected basis:n, plus, mixed, or a matrix literal");
}

json report_to_json(const ergodic::EquilibriumReport& report) {
    json stats = json::array();
    for (const auto& s : report.statistics) {
        json entry;
        entry["name"] = s.name;
        entry["value"] = s.value;
        entry["standard_error"] = s.standard_error ? json(*s.standard_error) : json(nullptr);
        entry["threshold"] = s.threshold ? json(*s.threshold) : json(nullptr);
        entry["pass"] = s.pass;
        stats.push_back(std::move(entry));
    }
    json out;
    out["paths"] = report.paths;
    out["pass"] = report.pass;
    out["statistics"] = std::move(stats);
    return out;
}

std::string content_hash(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace qtraj::io
