// Command-line front end. Every subcommand prints JSON on stdout and exits
// 0 on success, 2 on schema/validation errors, 1 otherwise.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shelfbrg/brg.hpp"
#include "shelfbrg/error.hpp"
#include "shelfbrg/generator.hpp"
#include "shelfbrg/http_api.hpp"
#include "shelfbrg/physics.hpp"
#include "shelfbrg/pointing.hpp"
#include "shelfbrg/scene.hpp"
#include "shelfbrg/service.hpp"
#include "shelfbrg/validation.hpp"

namespace {

using shelfbrg::Error;
using shelfbrg::ErrorCode;
using shelfbrg::Json;
namespace brg = shelfbrg::brg;
namespace scene = shelfbrg::scene;
namespace pointing = shelfbrg::pointing;
namespace service = shelfbrg::service;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << text;
}

void emit(const Json& j) { std::cout << j.dump(2) << std::endl; }

int fail(std::string_view code, std::string_view detail, int status) {
  emit(Json{{"error", code}, {"detail", detail}});
  return status;
}

std::vector<shelfbrg::Vec3> parse_palette(const std::string& spec) {
  // "x,y,z;x,y,z"
  std::vector<shelfbrg::Vec3> out;
  std::stringstream entries(spec);
  std::string entry;
  while (std::getline(entries, entry, ';')) {
    std::stringstream fields(entry);
    std::string f;
    std::vector<double> v;
    while (std::getline(fields, f, ',')) {
      try {
        v.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw Error(ErrorCode::SchemaError, "palette entry '" + entry + "' is not numeric");
      }
    }
    if (v.size() != 3)
      throw Error(ErrorCode::SchemaError, "palette entry '" + entry + "' needs 3 numbers");
    out.push_back({v[0], v[1], v[2]});
  }
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

scene::Scene load_scene_file(const std::string& path) { return scene::parse_scene(read_file(path)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collapse-safe shelf extraction planner"};
  app.require_subcommand(1);

  std::string scene_path, target, policy = "literal", ranking = "literal";

  auto* validate = app.add_subcommand("validate", "Check a scene document against every invariant");
  validate->add_option("--scene,scene", scene_path, "Scene JSON file")->required();

  std::uint64_t seed = 0;
  std::size_t n_boxes = 1;
  std::string out_path, palette_spec;
  std::vector<double> shelf_dims{1.0, 0.3, 1.6};
  auto* generate = app.add_subcommand("generate", "Generate a seeded random stable scene");
  generate->add_option("--seed", seed, "Random seed")->required();
  generate->add_option("--boxes", n_boxes, "Number of boxes")->required()->check(CLI::PositiveNumber);
  generate->add_option("--out", out_path, "Write the scene here instead of stdout");
  generate->add_option("--palette", palette_spec, "Box sizes as 'x,y,z;x,y,z' (meters)");
  generate->add_option("--shelf", shelf_dims, "Shelf width depth height (meters)")->expected(3);

  bool dot = false;
  std::string dot_file;
  auto* brg_cmd = app.add_subcommand("brg", "Build the box relations graph");
  brg_cmd->add_option("--scene", scene_path, "Scene JSON file")->required();
  brg_cmd->add_flag("--dot", dot, "Include Graphviz text in the output");
  brg_cmd->add_option("--dot-file", dot_file, "Also write raw Graphviz text to this file");

  auto* plan_cmd = app.add_subcommand("plan", "Collapse-safe extraction sequence and task split");
  plan_cmd->add_option("--scene", scene_path, "Scene JSON file")->required();
  plan_cmd->add_option("--target", target, "Target box id or ALL")->required();
  plan_cmd->add_option("--policy", policy, "literal | independence");

  std::string plan_path, sequence;
  auto* divide = app.add_subcommand("divide", "Split a plan into robot and human tasks");
  divide->add_option("--scene", scene_path, "Scene JSON file")->required();
  auto* plan_opt = divide->add_option("--plan", plan_path, "Plan JSON ({target, sequence} or plan output)");
  auto* seq_opt = divide->add_option("--sequence", sequence, "Comma-separated removal order");
  plan_opt->excludes(seq_opt);
  divide->add_option("--policy", policy, "literal | independence");

  long long k = 1;
  auto* support = app.add_subcommand("support", "Rank boxes a helper should hold");
  support->add_option("--scene", scene_path, "Scene JSON file")->required();
  support->add_option("--target", target, "Target box id")->required();
  support->add_option("--k", k, "Number of candidates")->required();
  support->add_option("--ranking", ranking, "literal | at_risk");

  std::string cloud_path, depth_order = "farthest";
  pointing::ClusterParams cluster;
  pointing::TargetOptions target_opts;
  auto* point = app.add_subcommand("point", "Resolve a pointing gesture to a box");
  point->add_option("--scene", scene_path, "Scene JSON file")->required();
  point->add_option("--cloud", cloud_path, "Point-cloud JSON file")->required();
  point->add_option("--eps", cluster.eps, "DBSCAN radius (m)");
  point->add_option("--min-pts", cluster.min_pts, "DBSCAN core threshold");
  point->add_option("--min-cluster-size", cluster.min_cluster_size, "Pointing detection gate");
  point->add_option("--fraction", target_opts.fraction, "Deepest fraction used for the median");
  point->add_option("--depth-order", depth_order, "farthest | nearest");

  std::string events_path;
  auto* replay = app.add_subcommand("replay", "Re-execute and verify a session event file");
  replay->add_option("--events", events_path, "Event file (JSON lines)")->required();

  int port = 7711;
  std::string host = "127.0.0.1", events_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON session service");
  serve->add_option("--port", port, "Listen port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--events-dir", events_dir, "Persist session event files here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 1);
  }

  try {
    if (*validate) {
      const scene::Scene s = scene::decode_scene(
          shelfbrg::json_util::parse_text(read_file(scene_path), "scene document"));
      const auto report = scene::validate_scene(s);
      emit(scene::to_json(report));
      return report.empty() ? 0 : 2;
    }

    if (*generate) {
      const auto palette = palette_spec.empty() ? scene::default_palette() : parse_palette(palette_spec);
      const scene::ShelfSpec shelf{shelf_dims[0], shelf_dims[1], shelf_dims[2]};
      const scene::Scene s = scene::generate_scene(seed, n_boxes, palette, shelf);
      if (out_path.empty()) {
        emit(scene::encode_scene(s));
      } else {
        write_file(out_path, scene::export_scene(s));
        emit(Json{{"out", out_path}, {"boxes", s.boxes.size()}, {"seed", seed}});
      }
      return 0;
    }

    if (*brg_cmd) {
      const auto s = load_scene_file(scene_path);
      const auto g = brg::build_graph(s);
      Json out = brg::to_json(g);
      const std::string text = brg::export_dot(g);
      if (dot) out["dot"] = text;
      if (!dot_file.empty()) write_file(dot_file, text);
      emit(out);
      return 0;
    }

    if (*plan_cmd) {
      const auto s = load_scene_file(scene_path);
      const auto g = brg::build_graph(s);
      const auto p = target == scene::kAllTarget ? brg::full_clear_sequence(g)
                                                 : brg::safe_sequence(g, target);
      const auto split = brg::divide_tasks(p, brg::to_dictionary(g), brg::parse_policy(policy));
      emit(service::to_json(service::PlanResponse{p, split}));
      return 0;
    }

    if (*divide) {
      const auto s = load_scene_file(scene_path);
      const auto d = brg::build_dependency_dictionary(s);
      brg::ExtractionPlan p;
      if (!plan_path.empty()) {
        Json doc = shelfbrg::json_util::parse_text(read_file(plan_path), "plan document");
        if (doc.is_object() && doc.contains("plan")) doc = doc["plan"];
        p = brg::plan_from_json(doc);
      } else if (*seq_opt) {
        p = {std::string(scene::kAllTarget), split_list(sequence)};
      } else {
        return fail("UsageError", "divide needs --plan or --sequence", 1);
      }
      emit(brg::to_json(brg::divide_tasks(p, d, brg::parse_policy(policy))));
      return 0;
    }

    if (*support) {
      const auto s = load_scene_file(scene_path);
      const auto g = brg::build_graph(s);
      emit(brg::to_json(brg::support_candidates(g, target, k, brg::parse_ranking(ranking))));
      return 0;
    }

    if (*point) {
      const auto s = load_scene_file(scene_path);
      const auto doc = pointing::decode_cloud(
          shelfbrg::json_util::parse_text(read_file(cloud_path), "cloud document"));
      if (depth_order == "farthest") target_opts.order = pointing::DepthOrder::Farthest;
      else if (depth_order == "nearest") target_opts.order = pointing::DepthOrder::Nearest;
      else return fail("UsageError", "--depth-order must be 'farthest' or 'nearest'", 1);
      emit(pointing::to_json(
          pointing::resolve_pointing(doc.cloud, s, cluster, doc.camera_pose, target_opts)));
      return 0;
    }

    if (*replay) {
      std::ifstream in(events_path);
      if (!in) throw IoError("cannot open '" + events_path + "'");
      const auto report = service::replay_events(in);
      emit(service::to_json(report));
      return report.mismatches.empty() ? 0 : 1;
    }

    if (*serve) {
      service::SessionManager::Options opts;
      if (!events_dir.empty()) opts.events_dir = events_dir;
      service::SessionManager mgr(opts);
      httplib::Server server;
      shelfbrg::http_api::register_routes(server, mgr);
      if (!server.bind_to_port(host, port))
        return fail("IOError", "cannot bind " + host + ":" + std::to_string(port), 1);
      std::cout << Json{{"listening", host}, {"port", port}}.dump() << std::endl;
      server.listen_after_bind();
      return 0;
    }
  } catch (const Error& e) {
    const bool validation =
        e.code() == ErrorCode::SchemaError || e.code() == ErrorCode::ValidationError;
    return fail(shelfbrg::to_string(e.code()), e.detail(), validation ? 2 : 1);
  } catch (const IoError& e) {
    return fail("IOError", e.what(), 1);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 1);
  }
  return 1;
}
