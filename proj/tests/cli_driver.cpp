// End-to-end exercise of the command-line tool: fit -> embed round trip,
// bench outputs, config/CSV error handling, and exit codes. Takes the CLI
// binary path as argv[1].

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "kpca/model_io.hpp"

namespace {

int g_failures = 0;

void check(bool cond, const std::string& what) {
  if (cond) {
    std::printf("[ok]   %s\n", what.c_str());
  } else {
    std::printf("[FAIL] %s\n", what.c_str());
    ++g_failures;
  }
}

int run(const std::string& command) {
  const int status = std::system((command + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: cli_driver <kpca_cli path> <source dir>\n");
    return 2;
  }
  const std::string cli = argv[1];
  const std::string source_dir = argv[2];
  const std::string dir = "/tmp/kpca_cli_test";
  std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str());

  // training data
  const kpca::SampleSet train = kpca::sample_gaussian(60, 2, 99);
  const std::string train_csv = dir + "/train.csv";
  {
    std::ofstream out(train_csv);
    out << "x,y\n";
    for (kpca::Index i = 0; i < train.size(); ++i) {
      char buf[80];
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", train.points(i, 0), train.points(i, 1));
      out << buf;
    }
  }

  // fit then embed on the training CSV; embedding must match eigfun_eval
  const std::string model_path = dir + "/model.json";
  check(run(cli + " fit --data " + train_csv + " --kernel gaussian --bandwidth 1.0 " +
            "--variant ekpca --ell 3 --out " + model_path) == 0,
        "fit exits 0");
  check(file_exists(model_path), "fit writes the model file");

  const std::string embed_path = dir + "/embed.csv";
  check(run(cli + " embed --model " + model_path + " --data " + train_csv + " --out " +
            embed_path) == 0,
        "embed exits 0");

  {
    const kpca::SavedModel saved = kpca::load_model(model_path);
    const Eigen::MatrixXd expected = kpca::eigfun_eval(saved.model, saved.kernel, train.points);
    const kpca::SampleSet embedded = kpca::load_csv(embed_path);
    check(embedded.size() == train.size() && embedded.dim() == 3,
          "embedding has one row per point and ell columns");
    check((embedded.points - expected).cwiseAbs().maxCoeff() <= 1e-12,
          "embedding equals the eigenfunction evaluations");
  }

  // nystrom and rff fits round-trip through the same path
  check(run(cli + " fit --data " + train_csv + " --kernel gaussian --variant nystrom " +
            "--ell 2 --m 20 --seed 7 --out " + dir + "/ny.json") == 0,
        "nystrom fit exits 0");
  check(run(cli + " embed --model " + dir + "/ny.json --data " + train_csv + " --out " + dir +
            "/ny_embed.csv") == 0,
        "nystrom embed exits 0");
  check(run(cli + " fit --data " + train_csv + " --kernel gaussian --variant rff " +
            "--ell 2 --m 32 --seed 7 --out " + dir + "/rf.json") == 0,
        "rff fit exits 0");
  check(run(cli + " embed --model " + dir + "/rf.json --data " + train_csv + " --out " + dir +
            "/rf_embed.csv") == 0,
        "rff embed exits 0");

  // bench with a minimal config produces the documented outputs
  const std::string config_path = dir + "/bench.conf";
  {
    std::ofstream out(config_path);
    out << "kernel = spectral\nalpha = 2.0\nfeatures = 50\ntheta = 0.5\n"
        << "n = 40 60 90\ntrials = 2\nvariants = ekpca\nnorms = H\n"
        << "m_rule = fixed\nm_fixed = 30\nn_test = 800\nseed = 4\n"
        << "out_rows = " << dir << "/rows.csv\nout_rates = " << dir << "/rates.csv\n"
        << "out_theory = " << dir << "/theory.csv\nout_plot = " << dir << "/plot\n";
  }
  check(run(cli + " bench --config " + config_path) == 0, "bench exits 0");
  check(file_exists(dir + "/rows.csv"), "bench writes the rows CSV");
  check(file_exists(dir + "/rates.csv"), "bench writes the rates CSV");
  check(file_exists(dir + "/theory.csv"), "bench writes the theory CSV");
  check(file_exists(dir + "/plot_ekpca_H.dat"), "bench writes plot data");
  check(slurp(dir + "/rows.csv").rfind("variant,norm,n,m,ell,t,trial,estimate,se,n_test,seed\n",
                                       0) == 0,
        "rows CSV carries the documented header");
  check(slurp(dir + "/rates.csv").rfind("group,slope,slope_se,predicted,R2,pass\n", 0) == 0,
        "rates CSV carries the documented header");

  // determinism: identical seed gives identical bytes, new seed does not
  const std::string rows_a = slurp(dir + "/rows.csv");
  check(run(cli + " bench --config " + config_path) == 0, "bench re-run exits 0");
  check(slurp(dir + "/rows.csv") == rows_a, "bench output is byte-identical under the same seed");
  check(run(cli + " bench --config " + config_path + " --seed 99") == 0,
        "bench with overridden seed exits 0");
  check(slurp(dir + "/rows.csv") != rows_a, "seed override changes the measurements");

  // the minimal documented config produces the three CSV outputs
  check(run("cd " + dir + " && " + cli + " bench --config " + source_dir +
            "/docs/minimal.conf") == 0,
        "minimal documented config exits 0");
  check(file_exists(dir + "/rows.csv") && file_exists(dir + "/rates.csv") &&
            file_exists(dir + "/theory.csv"),
        "minimal config produces rows, rates, and theory files");

  // input errors exit with code 2
  check(run(cli + " fit --data " + dir + "/missing.csv --ell 2 --out " + dir + "/x.json") == 2,
        "missing data file exits 2");
  {
    std::ofstream out(dir + "/bad.conf");
    out << "theta = -1\nn = 10 20 30\n";
  }
  check(run(cli + " bench --config " + dir + "/bad.conf") == 2, "invalid config exits 2");
  {
    std::ofstream out(dir + "/bad.csv");
    out << "0.1,0.2\noops,0.4\n";
  }
  check(run(cli + " fit --data " + dir + "/bad.csv --ell 1 --out " + dir + "/x.json") == 2,
        "malformed CSV exits 2");
  check(run(cli + " embed --model " + dir + "/rows.csv --data " + train_csv + " --out " + dir +
            "/x.csv") == 2,
        "non-model JSON exits 2");

  if (g_failures == 0) std::printf("cli driver: all checks passed\n");
  return g_failures == 0 ? 0 : 1;
}
