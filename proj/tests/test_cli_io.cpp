#include "dbf/cli_io.hpp"

#include "dbf/numio.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dbf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_shortest(0.03125) == "0.03125");
  CHECK(format_shortest(-0.18109) == "-0.18109");
  CHECK(format_shortest(10.0) == "10");
  CHECK(format_shortest(0.0) == "0");
  for (double v : {1.0 / 3.0, 2.5e-6, -9539.0, 6.666e-6}) {
    CHECK(std::stod(format_shortest(v)) == v);
  }
}

TEST_CASE("preset expansion") {
  CHECK(preset_parameters("groupII:test7") == std::pair{1000.0, 2.5e-1});
  CHECK(preset_parameters("groupI:test1") == std::pair{10.0, 2.5e-6});
  CHECK(preset_parameters("groupI:test9") == std::pair{1000.0, 2.5e-4});
  CHECK(preset_parameters("groupII:test5") == std::pair{100.0, 2.5e+0});
  CHECK_THROWS_AS(preset_parameters("groupIII:test1"), UsageError);
  CHECK_THROWS_AS(preset_parameters("groupI:test0"), UsageError);
  CHECK_THROWS_AS(preset_parameters("nonsense"), UsageError);
}

TEST_CASE("argument parsing") {
  CHECK_THROWS_AS(parse_config({}), UsageError);

  const RunConfig solve = parse_config(
      {"solve", "--problem", "cavity", "--model", "dbf", "--preset", "groupII:test9"});
  CHECK(solve.command == RunConfig::Command::solve);
  CHECK(solve.re == 1000.0);
  CHECK(solve.da == 2.5e+1);
  CHECK(solve.cf == 0.5);
  CHECK(solve.gamma == 1.0);
  CHECK(solve.global_refines == 5);
  CHECK(solve.amr_cycles == 4);
  CHECK(solve.newton_tol == 1e-12);

  // mms defaults to the all-ones parameter set
  const RunConfig mms = parse_config({"solve", "--problem", "mms"});
  CHECK(mms.re == 1.0);
  CHECK(mms.da == 1.0);
  CHECK(mms.cf == 1.0);

  const RunConfig converge = parse_config({"converge", "--max-level", "4"});
  CHECK(converge.command == RunConfig::Command::converge);
  CHECK(converge.max_level == 4);

  CHECK_THROWS_AS(parse_config({"solve", "--problem", "cavity"}), UsageError);
  CHECK_THROWS_AS(parse_config({"solve", "--problem", "bogus"}), UsageError);
  CHECK_THROWS_AS(
      parse_config({"solve", "--preset", "groupI:test1", "--re", "5", "--da", "1"}),
      UsageError);
  CHECK_THROWS_AS(parse_config({"solve", "--problem", "cavity", "--re", "-2"}),
                  UsageError);
}

TEST_CASE("config file keys with command-line override") {
  const auto dir = temp_dir("dbf_config_test");
  const auto cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "problem = cavity\nmodel = brinkman\nre = 50\nda = 0.5\n";
  }
  const RunConfig from_file = parse_config({"solve", "--config", cfg.string()});
  CHECK(from_file.model == ModelVariant::brinkman);
  CHECK(from_file.re == 50.0);

  const RunConfig overridden =
      parse_config({"solve", "--config", cfg.string(), "--re", "10"});
  CHECK(overridden.re == 10.0);
  CHECK(overridden.da == 0.5);

  {
    std::ofstream out(cfg);
    out << "problem = cavity\nunknown_key = 3\n";
  }
  CHECK_THROWS_AS(parse_config({"solve", "--config", cfg.string()}), UsageError);
}

TEST_CASE("convergence table writer") {
  const auto dir = temp_dir("dbf_convergence_test");
  const std::string path = (dir / "convergence.csv").string();

  CHECK_THROWS_AS(write_convergence_table({{59, {1, 1, 1}}}, path),
                  std::invalid_argument);

  write_convergence_table({{59, {0.5, 0.5, 0.5}}, {187, {0.5, 0.5, 0.5}}}, path);
  CHECK(slurp(path) ==
        "DoFs,L2_u,rate_L2_u,H1_u,rate_H1_u,L2_p,rate_L2_p\n"
        "59,0.5,,0.5,,0.5,\n"
        "187,0.5,1,0.5,1,0.5,1\n");
}

TEST_CASE("vtk writer structure") {
  const auto dir = temp_dir("dbf_vtk_test");
  const Mesh mesh = Mesh::build_unit_square(0);
  const DofHandler dofs = distribute_dofs(mesh);
  const SolutionState zero = SolutionState::zero(dofs);

  const std::string path = (dir / "single.vtk").string();
  write_vtk(mesh, dofs, zero, path);
  const std::string content = slurp(path);
  CHECK(content.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(content.find("POINTS 4 double") != std::string::npos);
  CHECK(content.find("CELLS 1 5") != std::string::npos);
  CHECK(content.find("CELL_TYPES 1\n9") != std::string::npos);
  CHECK(content.find("VECTORS velocity double\n0 0 0") != std::string::npos);
  CHECK(content.find("SCALARS pressure double") != std::string::npos);

  // cell count equals active cells, or 4x with subdivision
  const Mesh m3 = Mesh::build_unit_square(3);
  const DofHandler d3 = distribute_dofs(m3);
  const SolutionState z3 = SolutionState::zero(d3);
  write_vtk(m3, d3, z3, (dir / "m3.vtk").string());
  CHECK(slurp((dir / "m3.vtk").string()).find("CELLS 64 320") != std::string::npos);
  write_vtk(m3, d3, z3, (dir / "m3s.vtk").string(), true);
  CHECK(slurp((dir / "m3s.vtk").string()).find("CELLS 256 1280") != std::string::npos);

  // emitted coordinates are exact dyadic decimals
  std::ifstream in((dir / "m3.vtk").string());
  std::string line;
  while (std::getline(in, line) && line.rfind("POINTS", 0) != 0) {
  }
  for (int k = 0; k < 81; ++k) {
    REQUIRE(std::getline(in, line));
    std::istringstream fields(line);
    double x, y, z;
    fields >> x >> y >> z;
    CHECK(x * 8 == std::round(x * 8));
    CHECK(y * 8 == std::round(y * 8));
    CHECK(z == 0.0);
  }
}

TEST_CASE("centerline writer round trip") {
  const auto dir = temp_dir("dbf_centerline_test");
  Profile profile;
  for (int i = 0; i < 201; ++i) {
    profile.coord.push_back(i / 200.0);
    profile.value.push_back(std::sin(0.1 * i) * 1e-3);
  }
  const std::string path = (dir / "centerline_ux.csv").string();
  write_centerline(profile, "u_x", path);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "coord,u_x");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) == profile.coord[rows]);
    CHECK(std::stod(line.substr(comma + 1)) == profile.value[rows]);
    ++rows;
  }
  CHECK(rows == 201);
}

TEST_CASE("solve runs reproduce their outputs byte for byte") {
  RunConfig config = parse_config({"solve", "--problem", "cavity", "--model", "brinkman",
                                   "--preset", "groupI:test1", "--global-refines", "2",
                                   "--amr-cycles", "1"});
  const auto dir_a = temp_dir("dbf_repro_a");
  const auto dir_b = temp_dir("dbf_repro_b");
  config.output_dir = dir_a.string();
  REQUIRE(run_solve(config) == 0);
  config.output_dir = dir_b.string();
  REQUIRE(run_solve(config) == 0);

  for (const char* name : {"cycles.csv", "centerline_ux.csv", "centerline_uy.csv"}) {
    CHECK(slurp((dir_a / name).string()) == slurp((dir_b / name).string()));
  }
  // the run writes exactly the expected files
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir_a))
    files.push_back(entry.path().filename().string());
  std::sort(files.begin(), files.end());
  CHECK(files == std::vector<std::string>{"centerline_ux.csv", "centerline_uy.csv",
                                          "cycles.csv", "run.log"});
}

TEST_CASE("mms solve writes a convergence table over cycles") {
  RunConfig config = parse_config({"solve", "--problem", "mms", "--global-refines", "2",
                                   "--amr-cycles", "1"});
  const auto dir = temp_dir("dbf_mms_solve");
  config.output_dir = dir.string();
  REQUIRE(run_solve(config) == 0);
  const std::string table = slurp((dir / "convergence.csv").string());
  CHECK(table.rfind("DoFs,", 0) == 0);
  int lines = 0;
  for (char c : table)
    if (c == '\n') ++lines;
  CHECK(lines == 3);  // header + 2 cycles
}
