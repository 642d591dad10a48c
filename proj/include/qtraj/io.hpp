// io.hpp - model files, state literals and report serialization
//
// Complex numbers are always [re, im] pairs; matrices are arrays of rows.
//
// Lindblad model file:
//   { "dim": d,
//     "hamiltonian": d×d,
//     "jump_operators": [d×d, ...],
//     "decomposition": { "L0": d²×d², "J": [d²×d², ...] } }   // optional
// Superoperator matrices act on column-stacked operators. Without
// "decomposition" the natural choice J_i(ρ) = V_i ρ V_i* is used.
//
// Kraus model file:
//   { "dim": d, "kraus_operators": [d×d, ...] }

#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include <json.hpp>

#include "qtraj/discrete.hpp"
#include "qtraj/ergodic.hpp"
#include "qtraj/model.hpp"

namespace qtraj::io {

using json = nlohmann::json;

struct LindbladModelFile {
    model::LindbladModel model;
    model::DecompositionChoice decomposition = model::NaturalChoice{};
};

using ModelFile = std::variant<LindbladModelFile, discrete::KrausModel>;

// Throws ParseError with line/column for syntax errors and the JSON pointer
// of the offending field for schema errors.
ModelFile parse_model(const std::string& text);
ModelFile load_model(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

json matrix_to_json(const ComplexMatrix& m);
// `where` is the JSON pointer used in error messages.
ComplexMatrix matrix_from_json(const json& j, const std::string& where, Index rows = -1, Index cols = -1);

// `basis:n` (|n⟩⟨n|), `plus` (d = 2), `mixed` (I/d), or a JSON matrix literal.
DensityMatrix parse_state(const std::string& spec, Index d);

json report_to_json(const ergodic::EquilibriumReport& report);

// FNV-1a 64-bit hash as 16 hex digits.
std::string content_hash(const std::string& bytes);

} // namespace qtraj::io
