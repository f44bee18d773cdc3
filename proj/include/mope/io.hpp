#ifndef MOPE_IO_HPP
#define MOPE_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>

#include "json.hpp"
#include "mope/function_classes.hpp"
#include "mope/sampling.hpp"

namespace mope::io {

using nlohmann::json;

/// Raised for malformed input files; the message names the file and the field.
class FormatError : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/**
   {n_states, n_actions, gamma, d0, transition[s][a][s'],
    rewards[s*|A|+a] = [[value, prob], ...], r_max (optional)}
*/
TabularMDP mdp_from_json(const json& j);
json to_json(const TabularMDP& mdp);
TabularMDP load_mdp(const std::filesystem::path& path);

/// Nested array, one row per state.
Policy policy_from_json(const json& j);
json to_json(const Policy& pi);
Policy load_policy(const std::filesystem::path& path);

Vector vector_from_json(const json& j);
json to_json(const Vector& v);
Vector load_vector(const std::filesystem::path& path);

/// Header s,a,r,s_prime; rewards printed with 17 significant digits.
void write_dataset(std::ostream& out, const TransitionDataset& data);
void save_dataset(const std::filesystem::path& path, const TransitionDataset& data);
TransitionDataset load_dataset(const std::filesystem::path& path, const TabularMDP& mdp);

/// Plain numeric CSV, no header; one row per flattened (s,a).
Matrix load_matrix_csv(const std::filesystem::path& path);

/**
   Class spec: "onehot", "constant", "state", or a path to a feature CSV.
*/
LinearClass load_class(const std::string& spec, const TabularMDP& mdp);

std::string format_double(double x);

}  // namespace mope::io

#endif  // MOPE_IO_HPP
