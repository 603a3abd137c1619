// Copyright 2026 The synthcorpus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "synthcorpus/asr_eval.h"
#include "synthcorpus/audio_augment.h"
#include "synthcorpus/dedup.h"
#include "synthcorpus/error.h"
#include "synthcorpus/rating_analysis.h"
#include "synthcorpus/rng.h"
#include "synthcorpus/tts_qc.h"

namespace py = pybind11;
using namespace synthcorpus;

namespace {

py::dict AnovaRowDict(const ratings::AnovaRow& r) {
  py::dict d;
  d["source"] = r.source;
  d["ss"] = r.sum_of_squares;
  d["df"] = r.df;
  d["ms"] = r.mean_square;
  d["f"] = r.f;
  d["p"] = r.p;
  return d;
}

std::string OpsString(const asr_eval::Alignment& a) {
  std::string ops;
  for (auto op : a.ops) ops += asr_eval::EditOpCode(op);
  return ops;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Core routines of the synthcorpus toolkit.";

  static py::exception<Error> base_error(m, "Error", PyExc_RuntimeError);
  static py::exception<ValidationError> validation_error(m, "ValidationError", base_error.ptr());
  static py::exception<InsufficientData> insufficient(m, "InsufficientData", base_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyErr_SetString(validation_error.ptr(), e.what());
    } catch (const InsufficientData& e) {
      PyErr_SetString(insufficient.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base_error.ptr(), e.what());
    }
  });

  m.def("derive_seed", py::overload_cast<std::uint64_t, std::string_view>(&DeriveSeed), py::arg("root"),
        py::arg("label"));

  m.def(
      "normalize", [](std::string_view s) { return asr_eval::Normalizer{}.Apply(s); }, py::arg("text"),
      "Default normalization used before scoring.");
  m.def(
      "wer", [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps) {
        return asr_eval::Wer(refs, hyps);
      },
      py::arg("refs"), py::arg("hyps"));
  m.def(
      "cer",
      [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps, bool include_spaces) {
        return asr_eval::Cer(refs, hyps, {}, include_spaces);
      },
      py::arg("refs"), py::arg("hyps"), py::arg("include_spaces") = false);
  m.def(
      "edit_align",
      [](const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
        const auto a = asr_eval::EditAlign<std::string>(ref, hyp);
        return py::make_tuple(a.distance, OpsString(a));
      },
      py::arg("ref"), py::arg("hyp"), "Returns (distance, ops) with ops spelled M/S/D/I.");
  m.def(
      "bootstrap_eval",
      [](const std::vector<std::string>& refs, const std::vector<std::string>& hyps, std::size_t iterations,
         std::uint64_t seed) {
        const auto r = asr_eval::BootstrapEval(refs, hyps, {}, {iterations, seed});
        py::dict d;
        d["wer"] = r.wer;
        d["cer"] = r.cer;
        d["wer_mean"] = r.bootstrap.wer_mean;
        d["wer_std"] = r.bootstrap.wer_std;
        d["cer_mean"] = r.bootstrap.cer_mean;
        d["cer_std"] = r.bootstrap.cer_std;
        d["mean_unique_fraction"] = r.bootstrap.mean_unique_fraction;
        return d;
      },
      py::arg("refs"), py::arg("hyps"), py::arg("iterations") = 1000, py::arg("seed") = 0);

  m.def(
      "mix_at_snr",
      [](const std::vector<float>& signal, const std::vector<float>& noise, double snr_db) {
        return augment::MixAtSnr(signal, noise, snr_db).samples;
      },
      py::arg("signal"), py::arg("noise"), py::arg("snr_db"));
  m.def(
      "set_level",
      [](const std::vector<float>& signal, double target_dbfs) {
        const auto r = augment::SetLevel(signal, target_dbfs);
        return py::make_tuple(r.samples, r.peak_clamped);
      },
      py::arg("signal"), py::arg("target_dbfs"));
  m.def(
      "rms_dbfs", [](const std::vector<float>& x) { return augment::RmsDbfs(x); }, py::arg("samples"));

  m.def(
      "length_ratio",
      [](std::string_view source, std::string_view retranscript, const std::string& measure) {
        return tts_qc::LengthRatio(source, retranscript, tts_qc::ParseRatioMeasure(measure));
      },
      py::arg("source"), py::arg("retranscript"), py::arg("measure") = "chars");
  m.def(
      "filter_ratios",
      [](const std::vector<double>& ratios) {
        std::vector<tts_qc::TtsCandidate> cs(ratios.size());
        for (std::size_t i = 0; i < ratios.size(); ++i) {
          cs[i].utterance_id = std::to_string(i);
          cs[i].retranscript = "";
          cs[i].length_ratio = ratios[i];
        }
        const auto r = tts_qc::FilterOutliers(cs, {});
        std::vector<std::size_t> removed;
        for (const auto& c : r.removed) removed.push_back(std::stoul(c.utterance_id));
        return removed;
      },
      py::arg("ratios"), "Indices removed by the default MAD policy.");
  m.def(
      "rebalance_questions",
      [](const std::vector<bool>& is_question, double target_share, std::uint64_t seed) {
        return tts_qc::RebalanceQuestions(is_question, target_share, seed).kept_indices;
      },
      py::arg("is_question"), py::arg("target_share") = 0.25, py::arg("seed") = 0);

  m.def(
      "uniqueness_curve",
      [](const std::vector<std::vector<std::string>>& batches, const std::vector<std::size_t>& counts,
         std::size_t subsamples, std::uint64_t seed) {
        dedup::BatchedSentences b;
        for (std::size_t i = 0; i < batches.size(); ++i) b.emplace_back(std::to_string(i), batches[i]);
        const auto curve = dedup::ComputeUniquenessCurve(b, counts, {.subsamples = subsamples, .seed = seed});
        std::vector<std::pair<std::size_t, double>> out;
        for (const auto& p : curve.points) out.emplace_back(p.batch_count, p.mean_unique_rate);
        return out;
      },
      py::arg("batches"), py::arg("batch_counts"), py::arg("subsamples") = 1000, py::arg("seed") = 0);

  m.def(
      "icc2k",
      [](const ratings::RatingMatrix& rows, bool listwise_deletion) {
        return ratings::Icc2k(rows, listwise_deletion);
      },
      py::arg("matrix"), py::arg("listwise_deletion") = false, "Rows are sentences, columns raters.");
  m.def(
      "anova_two_way",
      [](const std::vector<std::string>& model, const std::vector<std::string>& rater,
         const std::vector<double>& response) {
        const auto t = ratings::AnovaTwoWay(model, rater, response);
        return py::make_tuple(AnovaRowDict(t.model), AnovaRowDict(t.rater), AnovaRowDict(t.residual));
      },
      py::arg("model"), py::arg("rater"), py::arg("response"));
}
