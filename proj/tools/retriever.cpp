// Service entry points (crawl loop, pipeline workers, query API) and
// artifact builders (knowledge base, analyzer models).

#include <CLI11.hpp>

#include <csignal>
#include <thread>

#include "common.hpp"
#include "retriever/analyzers/core.hpp"
#include "retriever/analyzers/low_quality.hpp"
#include "retriever/analyzers/topics.hpp"
#include "retriever/download/http_client.hpp"
#include "retriever/nel/kb.hpp"
#include "retriever/query/server.hpp"
#include "retriever/service/workers.hpp"

using namespace retriever;

namespace {

// Blocks SIGINT and SIGTERM in every thread; wait_for_signal() collects
// them synchronously. Call before spawning threads.
sigset_t block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

void wait_for_signal(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"News retrieval service"};
  std::string data_dir = "var";
  std::string config_path;
  app.add_option("-d,--data-dir", data_dir, "Directory holding the databases");
  app.add_option("-c,--config", config_path, "Analyzer config JSON");
  app.require_subcommand(1);

  auto* crawl = app.add_subcommand("crawl", "Run the crawl loop (scheduler, downloaders, extractors, analyzers)");
  int extractors = 2, pipeline_workers = 1, delay_ms = 2000;
  bool until_idle = false;
  crawl->add_option("--extractors", extractors, "Extractor threads")->check(CLI::Range(1, 64));
  crawl->add_option("--pipeline-workers", pipeline_workers, "Analyzer threads (0 leaves articles queued)")
      ->check(CLI::Range(0, 64));
  crawl->add_option("--delay-ms", delay_ms, "Per-outlet delay when robots.txt sets none")->check(CLI::Range(0, 600000));
  crawl->add_flag("--until-idle", until_idle, "Exit once every crawl queue is drained");

  auto* work = app.add_subcommand("work", "Run analyzer workers only");
  int workers = 2;
  work->add_option("-n,--workers", workers, "Worker threads")->check(CLI::Range(1, 64));
  work->add_flag("--until-idle", until_idle, "Exit once the pipeline queue is drained");

  auto* serve = app.add_subcommand("serve", "Serve the query API");
  std::string host = "127.0.0.1";
  int port = 8080, refresh_s = 30;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("-p,--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--refresh-s", refresh_s, "Index and aggregate refresh interval")->check(CLI::Range(1, 86400));

  auto* kb_build = app.add_subcommand("kb-build", "Build the entity knowledge base with PageRank");
  std::string entities, edges, out;
  kb_build->add_option("--entities", entities, "Entity JSON-lines")->required()->check(CLI::ExistingFile);
  kb_build->add_option("--edges", edges, "Edge list TSV (from<TAB>to)")->required()->check(CLI::ExistingFile);
  kb_build->add_option("-o,--out", out, "Output JSON-lines")->required();

  auto* train_lowq = app.add_subcommand("train-lowq", "Train the low-quality classifier");
  auto* train_topics = app.add_subcommand("train-topics", "Train the topic model");
  std::string examples, lemmas;
  for (auto* sub : {train_lowq, train_topics}) {
    sub->add_option("--examples", examples, "Training JSON-lines")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "Model output path")->required();
  }
  train_topics->add_option("--lemmas", lemmas, "Lemma table TSV")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  return tools::guarded([&] {
    if (*kb_build) {
      auto kb = nel::build_knowledge_base(entities, edges);
      kb.save_jsonl(out);
      std::cout << "wrote " << kb.entities().size() << " entities to " << out << "\n";
      return;
    }
    if (*train_lowq) {
      auto data = analyzers::load_quality_examples(examples);
      analyzers::LinearQualityClassifier::train(data).save(out);
      std::cout << "trained on " << data.size() << " examples, wrote " << out << "\n";
      return;
    }
    if (*train_topics) {
      auto table = lemmas.empty() ? analyzers::LemmaTable{} : analyzers::LemmaTable::load_tsv(lemmas);
      auto data = analyzers::load_topic_examples(examples);
      std::vector<std::vector<std::string>> terms, labels;
      for (const auto& e : data) {
        terms.push_back(analyzers::topic_terms(analyzers::core_analyze(e.title, e.body, table)));
        labels.push_back(e.labels);
      }
      analyzers::TopicModel::train(terms, labels).save(out);
      std::cout << "trained on " << data.size() << " examples, wrote " << out << "\n";
      return;
    }

    auto signals = block_signals();
    tools::DataDir dir(data_dir);
    auto config = tools::analyzer_config(config_path);
    auto broker = dir.broker();
    auto store = dir.store();

    if (*crawl) {
      auto runner = pipeline_workers > 0 ? tools::make_runner(config, true, store, broker) : nullptr;
      service::CrawlServiceOptions opts;
      opts.extractors = extractors;
      opts.pipeline_workers = pipeline_workers;
      opts.downloader.default_delay = std::chrono::milliseconds(delay_ms);
      service::CrawlService svc(dir.scheduler(broker), broker, store, std::make_shared<download::HttplibClient>(),
                                runner, opts);
      svc.start();
      if (until_idle) {
        int calm = 0;
        while (calm < 3) {
          std::this_thread::sleep_for(std::chrono::milliseconds(500));
          calm = svc.quiescent() ? calm + 1 : 0;
        }
      } else {
        wait_for_signal(signals);
      }
      svc.stop();
      tools::print(svc.metrics());
      return;
    }

    if (*work) {
      auto runner = tools::make_runner(config, true, store, broker);
      service::WorkerGroup group;
      for (int i = 0; i < workers; ++i) {
        pipeline::WorkerSlot slot{"worker." + std::to_string(i), "cpu"};
        group.spawn(slot.id, [runner, slot] { return runner->run_once(slot); });
      }
      if (until_idle) {
        int calm = 0;
        while (calm < 3) {
          std::this_thread::sleep_for(std::chrono::milliseconds(200));
          auto d = broker->depth(pipeline::kPipelineQueue);
          calm = (d.claimed == 0 && broker->due(pipeline::kPipelineQueue) == 0) ? calm + 1 : 0;
        }
      } else {
        wait_for_signal(signals);
      }
      group.stop();
      tools::print(service::queue_metrics(*broker, runner.get()));
      if (group.step_errors() > 0) std::cerr << "last worker error: " << group.last_error() << "\n";
      return;
    }

    if (*serve) {
      auto lemma_table = config.lemma_table.empty()
                             ? std::make_shared<analyzers::LemmaTable>()
                             : std::make_shared<analyzers::LemmaTable>(analyzers::LemmaTable::load_tsv(config.lemma_table));
      std::shared_ptr<const nel::KnowledgeBase> kb;
      if (!config.knowledge_base.empty()) {
        kb = std::make_shared<nel::KnowledgeBase>(nel::KnowledgeBase::load_jsonl(config.knowledge_base));
      }
      auto index = std::make_shared<query::SearchIndex>(store, lemma_table);
      index->refresh();
      auto engine = std::make_shared<query::QueryEngine>(index, kb);
      engine->refresh_entity_counts();
      auto runner = tools::make_runner(config, false, store, broker);
      query::ServerOptions opts;
      opts.refresh_interval = std::chrono::seconds(refresh_s);
      query::ApiServer server(
          engine, [broker, runner] { return service::queue_metrics(*broker, runner.get()); }, opts);
      int bound = server.start(host, port);
      std::cerr << "serving on " << host << ":" << bound << " (" << index->size() << " articles)\n";
      wait_for_signal(signals);
      server.stop();
    }
  });
}
