// Analyzer pipeline control: status, version bumps and reindexing.

#include <CLI11.hpp>

#include "common.hpp"
#include "retriever/service/workers.hpp"

using namespace retriever;

int main(int argc, char** argv) {
  CLI::App app{"Analyzer pipeline control"};
  std::string data_dir = "var";
  std::string config_path;
  app.add_option("-d,--data-dir", data_dir, "Directory holding the databases");
  app.add_option("-c,--config", config_path, "Analyzer config JSON (versions, artifact paths)");
  app.require_subcommand(1);

  auto* status = app.add_subcommand("status", "Queue depths, stale counts per module and the hidden rate");
  auto* bump = app.add_subcommand("bump", "Increment a module's version");
  std::string module;
  bump->add_option("module", module, "Module name")->required();
  auto* reindex = app.add_subcommand("reindex", "Enqueue every article stale for a module");
  int priority = 0;
  reindex->add_option("module", module, "Module name")->required();
  reindex->add_option("-p,--priority", priority, "Queue priority");
  auto* order = app.add_subcommand("modules", "Print modules in execution order with versions");

  CLI11_PARSE(app, argc, argv);

  return tools::guarded([&] {
    tools::DataDir dir(data_dir);
    auto broker = dir.broker();
    auto store = dir.store();
    auto runner = tools::make_runner(tools::analyzer_config(config_path), false, store, broker);
    if (*status) {
      auto out = service::queue_metrics(*broker, runner.get());
      auto total = store->count();
      auto hidden = store->count_hidden();
      out["articles"] = total;
      out["hidden"] = hidden;
      out["hidden_rate"] = total == 0 ? 0.0 : static_cast<double>(hidden) / static_cast<double>(total);
      tools::print(out);
    } else if (*bump) {
      std::cout << module << " is now version " << runner->bump(module) << "\n";
    } else if (*reindex) {
      std::cout << "enqueued " << runner->reindex(module, priority) << " task(s) from " << module << "\n";
    } else if (*order) {
      auto& p = runner->pipeline();
      for (const auto& m : p.order()) {
        std::cout << m << " v" << p.version(m);
        const auto& deps = p.spec(m).depends_on;
        for (std::size_t i = 0; i < deps.size(); ++i) std::cout << (i ? ", " : " <- ") << deps[i];
        std::cout << "\n";
      }
    }
  });
}
