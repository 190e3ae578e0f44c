#include <filesystem>
#include <functional>
#include <iostream>

#include <CLI11.hpp>

#include "pf/cli.hpp"

#ifndef PF_VERSION
#define PF_VERSION "0.0.0"
#endif

namespace pf::cli {

namespace {

const std::vector<std::string> kVariants{"a", "b", "plain", "aytekin", "resize"};
const std::vector<std::string> kClusterers{"kmeans", "agg", "birch"};

CLI::Option* add_committee(CLI::App* app, std::vector<std::string>& committee) {
  return app->add_option("--committee", committee, "Comma-separated clusterers (kmeans,agg,birch)")
      ->delimiter(',')
      ->check(CLI::IsMember(kClusterers))
      ->capture_default_str();
}

// Options shared by `train` and `run`; scale-dependent defaults are filled in after
// parsing so that explicit values always win.
struct TrainFlags {
  CLI::Option* epochs = nullptr;
};

TrainFlags add_train_options(CLI::App* app, TrainOptions& t) {
  TrainFlags f;
  f.epochs = app->add_option("--epochs", t.epochs, "Training epochs (desk 200, paper scale 1000)")
                 ->check(CLI::PositiveNumber);
  app->add_option("--lr", t.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--latent", t.latent, "Latent length")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_flag("--unit-ball", t.unit_ball, "Variant b divides by the L2 norm instead of the mean square");
  app->add_option("--checkpoint-every", t.checkpoint_every, "Extra checkpoint every N epochs (0: final only)")
      ->check(CLI::NonNegativeNumber);
  return f;
}

void add_cluster_options(CLI::App* app, ClusterOptions& c) {
  add_committee(app, c.committee);
  app->add_option("--k", c.k, "Number of clusters")->capture_default_str()->check(CLI::Range(2, 64));
  app->add_flag("--standardize", c.standardize, "Z-score each feature before clustering");
  app->add_option("--linkage", c.linkage, "Linkage for agg and BIRCH's global phase")
      ->capture_default_str()
      ->check(CLI::IsMember({"single", "complete", "average", "ward"}));
}

}  // namespace

int run_main(int argc, const char* const* argv) {
  CLI::App app{"Unsupervised fingerprint pattern clustering with constrained convolutional autoencoders", "pf"};
  app.set_version_flag("--version", PF_VERSION);
  app.require_subcommand(1);
  std::function<void()> action;

  // synth
  SynthOptions so;
  bool so_paper = false;
  auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic fingerprint dataset");
  synth->add_option("--out", so.out, "Output directory")->required();
  synth->add_option("--seed", so.seed, "Generator seed")->capture_default_str();
  auto* so_n = synth->add_option("--n-per-class", so.n_per_class, "Images per class (desk 100, paper scale 250)")
                   ->check(CLI::PositiveNumber);
  auto* so_size = synth->add_option("--size", so.size, "Image side in pixels (desk 128, paper scale 256)")
                      ->check(CLI::Range(16, 4096));
  auto* so_freq = synth->add_option("--frequency", so.frequency, "Ridge frequency in cycles per pixel")
                      ->check(CLI::PositiveNumber);
  synth->add_flag("--paper-scale", so_paper, "Paper-scale defaults");
  synth->callback([&] {
    if (so_paper) {
      const Scale s = paper_scale();
      if (!so_n->count()) so.n_per_class = s.n_per_class;
      if (!so_size->count()) so.size = s.synth_size;
      if (!so_freq->count()) so.frequency = s.frequency;
    }
    action = [&] { cmd_synth(so); };
  });

  // preprocess
  PreprocessOptions po;
  bool po_paper = false;
  auto* prep = app.add_subcommand("preprocess", "Crop, denoise, equalize, binarize and resize a dataset");
  prep->add_option("--manifest", po.manifest, "Input manifest CSV")->required();
  prep->add_option("--out", po.out, "Output directory")->required();
  auto* po_size = prep->add_option("--size", po.size, "Output side (desk 128, paper scale 256)")
                      ->check(CLI::Range(16, 4096));
  auto* po_crop = prep->add_option("--crop", po.crop, "Crop side; 0 = 200/256 of the shorter side (paper scale 200)")
                      ->check(CLI::NonNegativeNumber);
  prep->add_flag("--permissive", po.permissive, "Skip unreadable rows instead of failing");
  prep->add_flag("--paper-scale", po_paper, "Paper-scale defaults");
  prep->callback([&] {
    if (po_paper) {
      const Scale s = paper_scale();
      if (!po_size->count()) po.size = s.image_size;
      if (!po_crop->count()) po.crop = s.crop;
    }
    action = [&] { cmd_preprocess(po); };
  });

  // train
  TrainOptions to;
  bool to_paper = false;
  auto* train = app.add_subcommand("train", "Train an autoencoder on a preprocessed dataset");
  train->add_option("--manifest", to.manifest, "Preprocessed manifest CSV")->required();
  train->add_option("--out", to.out, "Output directory")->required();
  train->add_option("--variant", to.variant, "Model variant")->capture_default_str()->check(CLI::IsMember(kVariants));
  train->add_option("--seed", to.seed, "Initialization and shuffling seed")->capture_default_str();
  const TrainFlags tf = add_train_options(train, to);
  train->add_flag("--paper-scale", to_paper, "Paper-scale defaults");
  train->callback([&] {
    if (!tf.epochs->count()) to.epochs = to_paper ? paper_scale().epochs : desk_scale().epochs;
    action = [&] { cmd_train(to); };
  });

  // encode
  EncodeOptions eo;
  auto* encode = app.add_subcommand("encode", "Compute feature rows for every image");
  encode->add_option("--manifest", eo.manifest, "Preprocessed manifest CSV")->required();
  encode->add_option("--model", eo.model, "Trained model (model.pft)");
  encode->add_option("--variant", eo.variant, "resize for the baseline; otherwise checked against the model")
      ->check(CLI::IsMember(kVariants));
  encode->add_option("--resize-side", eo.resize_side, "Baseline resize side")->capture_default_str();
  encode->add_option("--out", eo.out, "Output directory")->required();
  encode->callback([&] { action = [&] { cmd_encode(eo); }; });

  // cluster
  ClusterOptions co;
  auto* cluster = app.add_subcommand("cluster", "Run each committee clusterer on a feature table");
  cluster->add_option("--latents", co.latents, "Feature table (latents.pft)")->required();
  cluster->add_option("--out", co.out, "Output directory")->required();
  cluster->add_option("--seed", co.seed, "k-means seed")->capture_default_str();
  add_cluster_options(cluster, co);
  cluster->callback([&] { action = [&] { cmd_cluster(co); }; });

  // consensus
  ConsensusOptions cso;
  auto* consensus = app.add_subcommand("consensus", "Unanimous-vote hybrid over the cluster stage's committee");
  consensus->add_option("--clusters", cso.clusters, "Cluster stage directory")->required();
  consensus->add_option("--out", cso.out, "Output directory")->required();
  add_committee(consensus, cso.committee);
  consensus->callback([&] { action = [&] { cmd_consensus(cso); }; });

  // evaluate
  EvaluateOptions evo;
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy, precision, recall, F1 and reject rate");
  evaluate->add_option("--latents", evo.latents, "Feature table the clusters came from")->required();
  evaluate->add_option("--clusters", evo.clusters, "Cluster stage directory")->required();
  evaluate->add_option("--consensus", evo.consensus, "Consensus stage directory (adds the hybrid row)");
  evaluate->add_option("--manifest", evo.manifest, "Labeled manifest (default: labels stored with the features)");
  evaluate->add_option("--out", evo.out, "Output directory")->required();
  evaluate->callback([&] { action = [&] { cmd_evaluate(evo); }; });

  // embed
  EmbedOptions emo;
  auto* embed = app.add_subcommand("embed", "2-D embedding and SVG scatter of a feature table");
  embed->add_option("--latents", emo.latents, "Feature table")->required();
  embed->add_option("--consensus", emo.consensus, "Consensus stage directory (colors, rejected markers)");
  embed->add_option("--method", emo.method, "pca or tsne")->capture_default_str()->check(CLI::IsMember({"pca", "tsne"}));
  embed->add_option("--seed", emo.seed, "t-SNE seed")->capture_default_str();
  embed->add_option("--out", emo.out, "Output directory")->required();
  embed->callback([&] { action = [&] { cmd_embed(emo); }; });

  // report
  ReportOptions ro;
  auto* report = app.add_subcommand("report", "Comparison table over evaluated variants");
  report->add_option("--eval", ro.evaluations, "Evaluate stage directory (repeatable)")->required();
  report->add_option("--out", ro.out, "Output directory")->required();
  report->callback([&] { action = [&] { cmd_report(ro); }; });

  // run
  RunOptions rno;
  std::uint64_t run_seed = 0;
  bool run_paper = false;
  auto* run = app.add_subcommand("run", "Full pipeline: synth or manifest, then every stage, then the report");
  run->add_option("--out", rno.out, "Output directory")->required();
  run->add_option("--manifest", rno.manifest, "Use this dataset instead of generating one");
  run->add_option("--seed", run_seed, "Top-level seed for every stage")->capture_default_str();
  run->add_option("--variant", rno.variants, "Comma-separated variants")
      ->delimiter(',')
      ->check(CLI::IsMember(kVariants))
      ->capture_default_str();
  auto* rn_n = run->add_option("--n-per-class", rno.synth.n_per_class, "Synthetic images per class")
                   ->check(CLI::PositiveNumber);
  auto* rn_synth = run->add_option("--synth-size", rno.synth.size, "Synthetic image side")->check(CLI::Range(16, 4096));
  auto* rn_size = run->add_option("--size", rno.preprocess.size, "Preprocessed side = model input")
                      ->check(CLI::Range(16, 4096));
  auto* rn_crop = run->add_option("--crop", rno.preprocess.crop, "Crop side; 0 = 200/256 of the shorter side")
                      ->check(CLI::NonNegativeNumber);
  run->add_flag("--permissive", rno.preprocess.permissive, "Skip unreadable manifest rows");
  const TrainFlags rf = add_train_options(run, rno.train);
  add_cluster_options(run, rno.cluster);
  run->add_option("--embed", rno.embed, "Scatter per variant: pca, tsne or none")
      ->capture_default_str()
      ->check(CLI::IsMember({"pca", "tsne", "none"}));
  run->add_flag("--paper-scale", run_paper, "Paper-scale defaults (256 px, 1000 epochs, 1000 samples)");
  run->callback([&] {
    const Scale s = run_paper ? paper_scale() : desk_scale();
    if (!rn_n->count()) rno.synth.n_per_class = s.n_per_class;
    if (!rn_synth->count()) rno.synth.size = s.synth_size;
    rno.synth.frequency = s.frequency * s.synth_size / rno.synth.size;
    if (!rn_size->count()) rno.preprocess.size = s.image_size;
    if (!rn_crop->count()) rno.preprocess.crop = s.crop;
    if (!rf.epochs->count()) rno.train.epochs = s.epochs;
    rno.synth.seed = rno.train.seed = rno.cluster.seed = run_seed;
    action = [&] { cmd_run(rno); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }
  try {
    action();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "pf: " << to_string(e.kind()) << " error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "pf: io error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::bad_alloc&) {
    std::cerr << "pf: out of memory\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "pf: error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace pf::cli
