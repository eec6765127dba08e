#include "commands.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <limits>

using namespace spherepack::cli;

namespace {

void add_pack_settings(CLI::App* cmd, PackSettings& s) {
  cmd->add_option("--config", s.config_file, "key = value optimizer overrides");
  cmd->add_flag("--deterministic", s.deterministic, "fixed-order reductions (recorded in the manifest)");
  cmd->add_option("--scale", s.scale, "uniform scale applied to the mesh on load (e.g. 0.001 for mm)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--interior-samples", s.interior_samples, "interior training samples")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  cmd->add_option("--surface-samples", s.surface_samples, "surface training samples")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  cmd->add_option("--volume-samples", s.volume_samples, "Monte Carlo samples for the volume ratios")
      ->check(CLI::Range(std::size_t{1000}, std::numeric_limits<std::size_t>::max()));
  cmd->add_option("--metric-surface-samples", s.metric_surface_samples, "surface samples for d_max / d_avg")
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);

  CLI::App app{"Approximate triangle meshes with sets of spheres"};
  app.set_version_flag("--version", SPHEREPACK_VERSION);
  app.require_subcommand(1);

  PackOptions pack;
  auto* pack_cmd = app.add_subcommand("pack", "pack a mesh with spheres");
  pack_cmd->add_option("--mesh", pack.mesh, "OBJ or STL mesh")->required();
  pack_cmd->add_option("--spheres", pack.spheres, "number of spheres")
      ->required()
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  pack_cmd->add_option("--preset", pack.preset, "weight preset")->check(CLI::IsMember({"V", "S", "B"}));
  pack_cmd->add_option("--weights", pack.weights_file, "w_c = ... weight file");
  pack_cmd->add_option("--algo", pack.algo, "morphit or vssa")->check(CLI::IsMember({"morphit", "vssa"}));
  pack_cmd->add_option("--seed", pack.seed, "random seed");
  pack_cmd->add_option("--out", pack.out, "output sphere-set JSON")->required();
  pack_cmd->add_option("--urdf", pack.urdf, "URDF whose link collision origin and scale apply to the mesh");
  pack_cmd->add_option("--link", pack.link, "link name inside --urdf");
  add_pack_settings(pack_cmd, pack.settings);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "report fidelity metrics of a sphere set");
  eval_cmd->add_option("--mesh", eval.mesh)->required();
  eval_cmd->add_option("--spheres-file", eval.spheres_file)->required();
  eval_cmd->add_option("--volume-samples", eval.volume_samples)
      ->check(CLI::Range(std::size_t{1000}, std::numeric_limits<std::size_t>::max()));
  eval_cmd->add_option("--surface-samples", eval.surface_samples)
      ->check(CLI::Range(std::size_t{1}, std::numeric_limits<std::size_t>::max()));
  eval_cmd->add_option("--seed", eval.seed);
  eval_cmd->add_option("--scale", eval.scale)->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--force", eval.force, "evaluate even if the mesh hash differs");
  eval_cmd->add_option("--manifest", eval.manifest, "manifest path (default <spheres-file>.eval.manifest.json)");

  CompareOptions compare;
  auto* compare_cmd = app.add_subcommand("compare", "grid of algorithms x sphere counts x seeds to CSV");
  compare_cmd->add_option("--mesh", compare.mesh)->required();
  compare_cmd->add_option("--spheres", compare.spheres, "comma-separated counts")->required()->delimiter(',');
  compare_cmd->add_option("--algos", compare.algos, "morphit-V,morphit-S,morphit-B,vssa")
      ->required()
      ->delimiter(',');
  compare_cmd->add_option("--seeds", compare.seeds, "comma-separated seeds")->required()->delimiter(',');
  compare_cmd->add_option("--out", compare.out, "output CSV")->required();
  compare_cmd->add_flag("--allow-large", compare.allow_large, "permit more than 100 spheres");
  add_pack_settings(compare_cmd, compare.settings);

  ExportUrdfOptions urdf;
  auto* urdf_cmd = app.add_subcommand("export-urdf", "replace link collisions with sphere sets");
  urdf_cmd->add_option("--urdf", urdf.urdf)->required();
  urdf_cmd->add_option("--map", urdf.map, "link=spheres.json,...")->required();
  urdf_cmd->add_option("--out", urdf.out)->required();

  VizOptions viz;
  auto* viz_cmd = app.add_subcommand("viz", "write a sphere set as OBJ icospheres");
  viz_cmd->add_option("--spheres-file", viz.spheres_file)->required();
  viz_cmd->add_option("--subdivisions", viz.subdivisions)->check(CLI::Range(0, 4));
  viz_cmd->add_option("--out", viz.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error(kExitFlags, "flag", e.what());
    return kExitFlags;
  }

  if (pack_cmd->parsed()) return run_pack(pack, args);
  if (eval_cmd->parsed()) return run_eval(eval, args);
  if (compare_cmd->parsed()) return run_compare(compare, args);
  if (urdf_cmd->parsed()) return run_export_urdf(urdf, args);
  return run_viz(viz, args);
}
