#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mope/io.hpp"
#include "mope/rng.hpp"
#include "oracles.hpp"

using namespace mope;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
   const auto dir = fs::temp_directory_path() / ("mope_io_" + std::to_string(splitmix64(std::hash<std::string>{}(name))));
   fs::remove_all(dir);
   fs::create_directories(dir);
   return dir;
}

void write(const fs::path& path, const std::string& text)
{
   std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("MDP JSON round trip")
{
   const auto inst = oracle::random_instance(3, 4, 2, 0.85);
   const auto back = io::mdp_from_json(io::to_json(inst.mdp));
   CHECK(back.n_states == 4);
   CHECK(back.n_actions == 2);
   CHECK(back.gamma == inst.mdp.gamma);
   CHECK(back.r_max == inst.mdp.r_max);
   CHECK(back.d0 == inst.mdp.d0);
   CHECK(back.transition == inst.mdp.transition);
   REQUIRE(back.rewards.size() == inst.mdp.rewards.size());
   for (std::size_t i = 0; i < back.rewards.size(); ++i)
      for (std::size_t k = 0; k < back.rewards[i].size(); ++k) {
         CHECK(back.rewards[i][k].value == inst.mdp.rewards[i][k].value);
         CHECK(back.rewards[i][k].prob == inst.mdp.rewards[i][k].prob);
      }
}

TEST_CASE("r_max defaults to the largest reward")
{
   const auto j = io::json::parse(R"({"n_states":1,"n_actions":1,"gamma":0.5,"d0":[1],
                                      "transition":[[[1]]],"rewards":[[[0.25,0.5],[0.75,0.5]]]})");
   CHECK(io::mdp_from_json(j).r_max == 0.75);
}

TEST_CASE("malformed MDP files are rejected")
{
   auto j = io::to_json(oracle::random_instance(1, 2, 2, 0.9).mdp);
   auto missing = j;
   missing.erase("gamma");
   CHECK_THROWS_AS(io::mdp_from_json(missing), io::FormatError);

   auto ragged = j;
   ragged["transition"][0][1] = {1.0};
   CHECK_THROWS_AS(io::mdp_from_json(ragged), io::FormatError);

   auto not_stochastic = j;
   not_stochastic["transition"][0][0] = {0.5, 0.4};
   CHECK_THROWS_AS(io::mdp_from_json(not_stochastic), ValidationError);

   const auto dir = scratch("bad_json");
   write(dir / "broken.json", "{ not json");
   CHECK_THROWS_AS(io::load_mdp(dir / "broken.json"), io::FormatError);
   CHECK_THROWS_AS(io::load_mdp(dir / "absent.json"), io::FormatError);
   fs::remove_all(dir);
}

TEST_CASE("policy and vector round trip")
{
   const Policy pi = random_policy(3, 4, 5, 0.1);
   const Policy back = io::policy_from_json(io::to_json(pi));
   CHECK(back.probs == pi.probs);
   const Vector v = random_simplex(5, 2);
   CHECK(io::vector_from_json(io::to_json(v)) == v);
   CHECK_THROWS_AS(io::policy_from_json(io::json::parse("[[0.5,0.5],[1.0]]")), io::FormatError);
}

TEST_CASE("dataset CSV round trip is exact")
{
   const auto inst = oracle::random_instance(7);
   const auto data = draw_dataset(inst.mdp, inst.dist(), 300, 8);
   const auto dir = scratch("dataset");
   io::save_dataset(dir / "sub" / "data.csv", data);
   const auto back = io::load_dataset(dir / "sub" / "data.csv", inst.mdp);
   CHECK(back.tuples == data.tuples);
   fs::remove_all(dir);
}

TEST_CASE("dataset format errors carry the line number")
{
   const auto inst = oracle::random_instance(7, 3, 2, 0.9);
   const auto dir = scratch("dataset_errors");
   write(dir / "header.csv", "s,a,r\n0,0,0,0\n");
   CHECK_THROWS_AS(io::load_dataset(dir / "header.csv", inst.mdp), io::FormatError);

   const double r = inst.mdp.rewards[0][0].value;
   write(dir / "columns.csv", "s,a,r,s_prime\n0,0," + io::format_double(r) + ",1\n0,0,1\n");
   try {
      io::load_dataset(dir / "columns.csv", inst.mdp);
      FAIL("expected a format error");
   } catch (const io::FormatError& e) {
      CHECK(std::string(e.what()).find(":3:") != std::string::npos);
   }

   write(dir / "number.csv", "s,a,r,s_prime\nx,0,0,1\n");
   CHECK_THROWS_AS(io::load_dataset(dir / "number.csv", inst.mdp), io::FormatError);
   write(dir / "range.csv", "s,a,r,s_prime\n0,0," + io::format_double(r) + ",9\n");
   CHECK_THROWS_AS(io::load_dataset(dir / "range.csv", inst.mdp), ValidationError);
   fs::remove_all(dir);
}

TEST_CASE("feature matrices and class specs")
{
   const auto inst = oracle::random_instance(2, 3, 2, 0.9);
   const auto dir = scratch("classes");
   write(dir / "phi.csv", "1,0\n1,1\n0,1\n1,2\n2,1\n0.5,0.5\n");
   const auto cls = io::load_class((dir / "phi.csv").string(), inst.mdp);
   CHECK(cls.dim() == 2);
   CHECK(cls.features()(3, 1) == 2.0);
   CHECK(cls.name() == "phi");
   CHECK(io::load_class("onehot", inst.mdp).dim() == 6);
   CHECK(io::load_class("constant", inst.mdp).dim() == 1);
   CHECK(io::load_class("state", inst.mdp).dim() == 3);

   write(dir / "short.csv", "1\n2\n");
   CHECK_THROWS_AS(io::load_class((dir / "short.csv").string(), inst.mdp), io::FormatError);
   write(dir / "ragged.csv", "1,2\n3\n");
   CHECK_THROWS_AS(io::load_matrix_csv(dir / "ragged.csv"), io::FormatError);
   write(dir / "empty.csv", "\n");
   CHECK_THROWS_AS(io::load_matrix_csv(dir / "empty.csv"), io::FormatError);
   fs::remove_all(dir);
}

TEST_CASE("shipped example inputs load")
{
   const fs::path data = MOPE_DATA_DIR;
   const auto mdp = io::load_mdp(data / "mdp.json");
   const auto pi_e = io::load_policy(data / "pi_e.json");
   CHECK_NOTHROW(validate(pi_e, mdp.n_states, mdp.n_actions));
   CHECK(io::load_class((data / "state_action_features.csv").string(), mdp).n_pairs() == mdp.n_pairs());
}

TEST_CASE("doubles are written with round-trip precision")
{
   Rng rng(1);
   for (int k = 0; k < 100; ++k) {
      const double x = rng.normal() * 1e3;
      CHECK(std::stod(io::format_double(x)) == x);
   }
}
