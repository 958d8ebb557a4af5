/*
 * Copyright 2026 The recollab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>
#include <pybind11/operators.h>

#include <fstream>
#include <sstream>

#include "recollab/cli.hpp"
#include "recollab/crs.hpp"
#include "recollab/datamodel.hpp"
#include "recollab/metrics.hpp"
#include "recollab/pipeline.hpp"
#include "recollab/sfa.hpp"
#include "recollab/target.hpp"

namespace py = pybind11;
using namespace recollab;

namespace {

Split split_arg(const std::string& s) {
  const auto split = parse_split(s);
  if (!split) throw py::value_error("unknown split: " + s);
  return *split;
}

std::string box_repr(const BBox& b) {
  std::ostringstream out;
  out << "BBox(" << b.x0() << ", " << b.y0() << ", " << b.x1() << ", " << b.y1() << ")";
  return out.str();
}

// JSON crosses the boundary as text; the package wrapper decodes it.
std::string report_json(const std::filesystem::path& tasks_path, const std::string& split,
                        const std::filesystem::path& log_path, std::vector<std::size_t> ks) {
  const TaskSet ts = load_taskset(tasks_path, split_arg(split));
  const LogContents log = read_prediction_log(log_path);
  ReportInputs in;
  in.tasks = &ts;
  in.predictions = log.predictions;
  in.ks = std::move(ks);
  return build_report(in).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_recollab, m) {
  m.doc() = "Native core of recollab.";

  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);

  py::class_<BBox>(m, "BBox")
      .def(py::init<double, double, double, double>(), py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"))
      .def_property_readonly("x0", &BBox::x0)
      .def_property_readonly("y0", &BBox::y0)
      .def_property_readonly("x1", &BBox::x1)
      .def_property_readonly("y1", &BBox::y1)
      .def_property_readonly("width", &BBox::width)
      .def_property_readonly("height", &BBox::height)
      .def_property_readonly("area", &BBox::area)
      .def("as_list", [](const BBox& b) { return std::vector<double>{b.x0(), b.y0(), b.x1(), b.y1()}; })
      .def(py::self == py::self)
      .def("__repr__", &box_repr);

  py::class_<Detection>(m, "Detection")
      .def(py::init([](const BBox& box, double score, std::optional<std::string> category,
                       std::vector<std::tuple<std::size_t, std::size_t, double>> tokens) {
             Detection d{box, score, std::move(category), {}};
             for (const auto& [b, e, s] : tokens) d.token_scores.push_back(TokenScore{TokenSpan{b, e}, s});
             validate_detection(d);
             return d;
           }),
           py::arg("box"), py::arg("score"), py::arg("category") = std::nullopt,
           py::arg("token_scores") = std::vector<std::tuple<std::size_t, std::size_t, double>>{})
      .def_readonly("box", &Detection::box)
      .def_readonly("score", &Detection::score)
      .def_readonly("category", &Detection::category)
      .def_property_readonly("token_scores", [](const Detection& d) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const auto& t : d.token_scores) out.emplace_back(t.span.begin, t.span.end, t.score);
        return out;
      });

  m.def("iou", &iou, py::arg("a"), py::arg("b"));
  m.def(
      "nms", [](const std::vector<Detection>& dets, double thr) { return nms_indices(dets, thr); },
      py::arg("detections"), py::arg("iou_threshold"), "Kept input indices in keep order.");

  m.def(
      "parse_box_answer",
      [](const std::string& text) {
        const auto g = parse_box_answer(text);
        return py::make_tuple(g.box, g.malformed);
      },
      py::arg("text"), "Returns (box or None, malformed).");
  m.def(
      "derive_confidence",
      [](std::vector<double> probs) {
        GenerativeGrounding g;
        g.box = BBox(0, 0, 1, 1);
        g.coordinate_token_probs = std::move(probs);
        return derive_confidence(g);
      },
      py::arg("coordinate_token_probs"));

  m.def("heuristic_target", &heuristic_target, py::arg("expression"));
  m.def("find_target_span", [](const std::string& q, const std::string& t) -> std::optional<std::pair<std::size_t, std::size_t>> {
    const auto s = find_target_span(q, t);
    if (!s) return std::nullopt;
    return std::make_pair(s->begin, s->end);
  });
  m.def(
      "build_base_prompt", [](const std::string& expr) { return build_base_prompt(expr); }, py::arg("expression"));
  m.def(
      "build_focus_prompt", [](const std::string& expr, const std::string& target) { return build_focus_prompt(expr, target); },
      py::arg("expression"), py::arg("target"));
  m.def(
      "route",
      [](const std::vector<Detection>& dets, const std::string& target, double threshold) {
        const auto d = route_from_detections(dets, target, threshold);
        return py::make_tuple(std::string(to_string(d.level)), d.detection_count);
      },
      py::arg("detections"), py::arg("target"), py::arg("threshold") = kDefaultRouteThreshold,
      "Returns (\"fast\" | \"slow\", detections at or above threshold).");
  m.def(
      "target_focus_select",
      [](const std::vector<Detection>& dets, const std::string& query, const std::string& target) {
        GroundingResult g{dets, query};
        const auto sel = target_focus_select(g, find_target_span(query, target));
        return py::make_tuple(sel.index, sel.target_score, sel.fallback);
      },
      py::arg("detections"), py::arg("query"), py::arg("target"), "Returns (index, target_score, fallback).");

  py::class_<ChoicePrompt>(m, "ChoicePrompt")
      .def_readonly("text", &ChoicePrompt::text)
      .def_readonly("none_label", &ChoicePrompt::none_label)
      .def("labels", &ChoicePrompt::labels)
      .def("box_for", &ChoicePrompt::box_for, py::arg("label"));

  m.def(
      "generate_candidates",
      [](const std::vector<Detection>& dets, std::size_t k, double thr) {
        std::vector<std::pair<std::string, Detection>> out;
        for (auto& c : generate_candidates(dets, k, thr).candidates) out.emplace_back(c.label, c.detection);
        return out;
      },
      py::arg("detections"), py::arg("k") = kDefaultTopK, py::arg("nms_threshold") = kDefaultNmsThreshold);
  m.def(
      "build_choice_prompt",
      [](const std::string& expr, const std::vector<Detection>& dets, std::size_t k, double thr, bool include_none) {
        return build_choice_prompt(expr, generate_candidates(dets, k, thr), include_none);
      },
      py::arg("expression"), py::arg("detections"), py::arg("k") = kDefaultTopK,
      py::arg("nms_threshold") = kDefaultNmsThreshold, py::arg("include_none") = true);
  m.def("parse_choice", &parse_choice, py::arg("raw"), py::arg("prompt"));

  m.def(
      "auroc", [](const std::vector<double>& pos, const std::vector<double>& neg) { return auroc(pos, neg); },
      py::arg("positive_scores"), py::arg("negative_scores"));

  m.def(
      "load_taskset",
      [](const std::filesystem::path& path, const std::string& split) {
        std::ostringstream out;
        write_taskset(out, load_taskset(path, split_arg(split)));
        return out.str();
      },
      py::arg("path"), py::arg("split") = "test");
  m.def(
      "validate_counts",
      [](const std::filesystem::path& path, const std::string& split, bool reference) {
        const TaskSet ts = load_taskset(path, split_arg(split));
        const auto expected = reference ? std::optional<ExpectedCounts>(finecops_ref_counts(ts.split())) : std::nullopt;
        return validate_counts(ts, expected).to_json().dump();
      },
      py::arg("path"), py::arg("split") = "test", py::arg("reference") = false);
  m.def(
      "pair_negatives",
      [](const std::filesystem::path& path, const std::string& split) {
        const TaskSet ts = load_taskset(path, split_arg(split));
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& p : pair_negatives(ts)) out.emplace_back(p.positive->id, p.negative->id);
        return out;
      },
      py::arg("path"), py::arg("split") = "test");
  m.def("report_json", &report_json, py::arg("tasks_path"), py::arg("split"), py::arg("log_path"),
        py::arg("ks") = std::vector<std::size_t>{1});

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        std::vector<const char*> argv{"recollab"};
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return run_cli(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Runs the command-line tool in process; returns its exit code.");
}
