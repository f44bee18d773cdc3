#include "mope/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mope::io {

namespace {

template <typename T>
T field(const json& j, const char* name)
{
   if (!j.contains(name))
      throw FormatError(std::string("missing field '") + name + "'");
   try {
      return j.at(name).get<T>();
   } catch (const json::exception& e) {
      throw FormatError(std::string("field '") + name + "': " + e.what());
   }
}

std::vector<std::string> split(const std::string& line, char sep)
{
   std::vector<std::string> out;
   std::string cell;
   std::istringstream in(line);
   while (std::getline(in, cell, sep))
      out.push_back(cell);
   if (!line.empty() && line.back() == sep)
      out.emplace_back();
   return out;
}

std::string trim(const std::string& s)
{
   const auto b = s.find_first_not_of(" \t\r");
   if (b == std::string::npos)
      return {};
   const auto e = s.find_last_not_of(" \t\r");
   return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, const std::string& where)
{
   try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size())
         throw std::invalid_argument(s);
      return v;
   } catch (const std::exception&) {
      throw FormatError(where + ": not a number: '" + s + "'");
   }
}

std::size_t parse_index(const std::string& s, const std::string& where)
{
   const double v = parse_double(s, where);
   if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw FormatError(where + ": not a nonnegative integer: '" + s + "'");
   return static_cast<std::size_t>(v);
}

std::ifstream open_in(const std::filesystem::path& path)
{
   std::ifstream in(path);
   if (!in)
      throw FormatError("cannot open " + path.string());
   return in;
}

}  // namespace

json read_json(const std::filesystem::path& path)
{
   auto in = open_in(path);
   try {
      return json::parse(in);
   } catch (const json::parse_error& e) {
      throw FormatError(path.string() + ": " + e.what());
   }
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
   if (path.has_parent_path())
      std::filesystem::create_directories(path.parent_path());
   std::ofstream out(path, std::ios::binary);
   if (!out)
      throw FormatError("cannot write " + path.string());
   out << text;
}

std::string format_double(double x)
{
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", x);
   return buf;
}

TabularMDP mdp_from_json(const json& j)
{
   TabularMDP mdp;
   mdp.n_states = field<std::size_t>(j, "n_states");
   mdp.n_actions = field<std::size_t>(j, "n_actions");
   mdp.gamma = field<double>(j, "gamma");
   mdp.r_max = j.value("r_max", 1.0);
   mdp.d0 = vector_from_json(j.at("d0"));

   const auto transition = field<std::vector<std::vector<std::vector<double>>>>(j, "transition");
   if (transition.size() != mdp.n_states)
      throw FormatError("transition: expected " + std::to_string(mdp.n_states) + " states");
   mdp.transition.resize(static_cast<Eigen::Index>(mdp.n_pairs()), static_cast<Eigen::Index>(mdp.n_states));
   for (std::size_t s = 0; s < mdp.n_states; ++s) {
      if (transition[s].size() != mdp.n_actions)
         throw FormatError("transition[" + std::to_string(s) + "]: expected " + std::to_string(mdp.n_actions)
                           + " actions");
      for (std::size_t a = 0; a < mdp.n_actions; ++a) {
         const auto& row = transition[s][a];
         if (row.size() != mdp.n_states)
            throw FormatError("transition[" + std::to_string(s) + "][" + std::to_string(a) + "]: wrong length");
         for (std::size_t t = 0; t < mdp.n_states; ++t)
            mdp.transition(static_cast<Eigen::Index>(mdp.index(s, a)), static_cast<Eigen::Index>(t)) = row[t];
      }
   }

   const auto rewards = field<std::vector<std::vector<std::array<double, 2>>>>(j, "rewards");
   if (rewards.size() != mdp.n_pairs())
      throw FormatError("rewards: expected one distribution per (s,a)");
   for (const auto& dist : rewards) {
      RewardDistribution d;
      for (const auto& [value, prob] : dist)
         d.push_back({value, prob});
      mdp.rewards.push_back(std::move(d));
   }
   if (!j.contains("r_max")) {
      double hi = 0.0;
      for (const auto& d : mdp.rewards)
         for (const auto& o : d)
            hi = std::max(hi, std::abs(o.value));
      mdp.r_max = hi > 0.0 ? hi : 1.0;
   }
   validate(mdp);
   return mdp;
}

json to_json(const TabularMDP& mdp)
{
   json j;
   j["n_states"] = mdp.n_states;
   j["n_actions"] = mdp.n_actions;
   j["gamma"] = mdp.gamma;
   j["r_max"] = mdp.r_max;
   j["d0"] = to_json(mdp.d0);
   json transition = json::array();
   for (std::size_t s = 0; s < mdp.n_states; ++s) {
      json per_state = json::array();
      for (std::size_t a = 0; a < mdp.n_actions; ++a)
         per_state.push_back(to_json(Vector(mdp.transition.row(static_cast<Eigen::Index>(mdp.index(s, a))))));
      transition.push_back(per_state);
   }
   j["transition"] = transition;
   json rewards = json::array();
   for (const auto& d : mdp.rewards) {
      json cell = json::array();
      for (const auto& o : d)
         cell.push_back({o.value, o.prob});
      rewards.push_back(cell);
   }
   j["rewards"] = rewards;
   return j;
}

TabularMDP load_mdp(const std::filesystem::path& path)
{
   try {
      return mdp_from_json(read_json(path));
   } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
   } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
   }
}

Policy policy_from_json(const json& j)
{
   const auto rows = j.get<std::vector<std::vector<double>>>();
   if (rows.empty())
      throw FormatError("policy: empty");
   Policy pi;
   pi.probs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
   for (std::size_t s = 0; s < rows.size(); ++s) {
      if (rows[s].size() != rows.front().size())
         throw FormatError("policy: ragged rows");
      for (std::size_t a = 0; a < rows[s].size(); ++a)
         pi.probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a)) = rows[s][a];
   }
   return pi;
}

json to_json(const Policy& pi)
{
   json j = json::array();
   for (Eigen::Index s = 0; s < pi.probs.rows(); ++s)
      j.push_back(to_json(Vector(pi.probs.row(s))));
   return j;
}

Policy load_policy(const std::filesystem::path& path)
{
   try {
      return policy_from_json(read_json(path));
   } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
   }
}

Vector vector_from_json(const json& j)
{
   const auto values = j.get<std::vector<double>>();
   return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json to_json(const Vector& v)
{
   return std::vector<double>(v.data(), v.data() + v.size());
}

Vector load_vector(const std::filesystem::path& path)
{
   try {
      return vector_from_json(read_json(path));
   } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
   }
}

void write_dataset(std::ostream& out, const TransitionDataset& data)
{
   out << "s,a,r,s_prime\n";
   for (const auto& t : data.tuples)
      out << t.s << ',' << t.a << ',' << format_double(t.r) << ',' << t.s_next << '\n';
}

void save_dataset(const std::filesystem::path& path, const TransitionDataset& data)
{
   std::ostringstream out;
   write_dataset(out, data);
   write_text(path, out.str());
}

TransitionDataset load_dataset(const std::filesystem::path& path, const TabularMDP& mdp)
{
   auto in = open_in(path);
   TransitionDataset data;
   data.n_states = mdp.n_states;
   data.n_actions = mdp.n_actions;
   std::string line;
   std::size_t line_no = 0;
   if (!std::getline(in, line) || trim(line) != "s,a,r,s_prime")
      throw FormatError(path.string() + ": expected header s,a,r,s_prime");
   ++line_no;
   while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty())
         continue;
      const auto cells = split(trim(line), ',');
      const std::string where = path.string() + ":" + std::to_string(line_no);
      if (cells.size() != 4)
         throw FormatError(where + ": expected 4 columns");
      Transition t;
      t.s = parse_index(trim(cells[0]), where);
      t.a = parse_index(trim(cells[1]), where);
      t.r = parse_double(trim(cells[2]), where);
      t.s_next = parse_index(trim(cells[3]), where);
      data.tuples.push_back(t);
   }
   validate(data, mdp);
   return data;
}

Matrix load_matrix_csv(const std::filesystem::path& path)
{
   auto in = open_in(path);
   std::vector<std::vector<double>> rows;
   std::string line;
   std::size_t line_no = 0;
   while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty())
         continue;
      const std::string where = path.string() + ":" + std::to_string(line_no);
      std::vector<double> row;
      for (const auto& cell : split(trim(line), ','))
         row.push_back(parse_double(trim(cell), where));
      if (!rows.empty() && row.size() != rows.front().size())
         throw FormatError(where + ": ragged row");
      rows.push_back(std::move(row));
   }
   if (rows.empty())
      throw FormatError(path.string() + ": empty matrix");
   Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
   for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t k = 0; k < rows[i].size(); ++k)
         m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
   return m;
}

LinearClass load_class(const std::string& spec, const TabularMDP& mdp)
{
   if (spec == "onehot")
      return one_hot(mdp);
   if (spec == "constant")
      return constant_class(mdp);
   if (spec == "state")
      return state_class(mdp);
   const Matrix features = load_matrix_csv(spec);
   if (features.rows() != static_cast<Eigen::Index>(mdp.n_pairs()))
      throw FormatError(spec + ": expected " + std::to_string(mdp.n_pairs()) + " rows, one per (s,a)");
   return LinearClass(features, std::filesystem::path(spec).stem().string());
}

}  // namespace mope::io
