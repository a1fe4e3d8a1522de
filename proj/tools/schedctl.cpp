// Crawl configuration: outlets, seeding and the recrawl schedule.

#include <CLI11.hpp>

#include "common.hpp"
#include "retriever/common/time.hpp"

using namespace retriever;

int main(int argc, char** argv) {
  CLI::App app{"Crawl scheduler control"};
  std::string data_dir = "var";
  app.add_option("-d,--data-dir", data_dir, "Directory holding the databases");
  app.require_subcommand(1);

  auto* add = app.add_subcommand("add-outlet", "Validate and register an outlet's crawl rules");
  std::string rules_path;
  add->add_option("rules", rules_path, "Rule set JSON file")->required()->check(CLI::ExistingFile);

  auto* seed = app.add_subcommand("seed", "Enqueue an outlet's homepages and schedule their recrawl");
  std::string outlet;
  seed->add_option("outlet", outlet, "Outlet id")->required();

  auto* list = app.add_subcommand("list", "Print registered outlets with their rules");
  auto* deferred = app.add_subcommand("deferred", "Print scheduled recrawls");
  auto* classify = app.add_subcommand("classify", "Classify a URL with an outlet's rules");
  std::string url;
  classify->add_option("outlet", outlet, "Outlet id")->required();
  classify->add_option("url", url, "URL")->required();

  CLI11_PARSE(app, argc, argv);

  return tools::guarded([&] {
    tools::DataDir dir(data_dir);
    auto broker = dir.broker();
    auto scheduler = dir.scheduler(broker);
    if (*add) {
      auto rules = crawl::load_rules_file(rules_path);
      scheduler->add_outlet(rules);
      std::cout << "registered " << rules.outlet_id << "\n";
    } else if (*seed) {
      std::cout << "seeded " << scheduler->seed(outlet) << " homepage(s) of " << outlet << "\n";
    } else if (*list) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& id : scheduler->outlets()) out.push_back(scheduler->rules(id)->rules().to_json());
      tools::print(out);
    } else if (*deferred) {
      nlohmann::json out = nlohmann::json::array();
      for (const auto& d : scheduler->deferred()) {
        out.push_back({{"url", d.url}, {"outlet_id", d.outlet_id}, {"release_at", format_iso8601(d.release_at)},
                       {"priority", d.priority}});
      }
      tools::print(out);
    } else if (*classify) {
      std::cout << crawl::to_string(scheduler->classify(crawl::normalize_url(url), outlet)) << "\n";
    }
  });
}
