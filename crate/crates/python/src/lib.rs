//! Python bindings for `srtk`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use srtk::conllu::Attrs;
use srtk::eval::{self, EvalMode};
use srtk::linearize::{self, append_form_list};
use srtk::realize::{self as rz, OracleScorer};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A CoNLL-U sentence.
#[pyclass(module = "pysrtk", name = "Sentence", from_py_object)]
#[derive(Clone)]
struct Sentence {
    inner: srtk::UdSentence,
}

#[pymethods]
impl Sentence {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let mut corpus = srtk::parse_conllu(text, true).map_err(value_error)?;
        match corpus.sentences.len() {
            1 => Ok(Sentence { inner: corpus.sentences.remove(0) }),
            n => Err(PyValueError::new_err(format!("expected one sentence, found {n}"))),
        }
    }

    #[getter]
    fn forms(&self) -> Vec<String> {
        self.inner.forms()
    }

    #[getter]
    fn lemmas(&self) -> Vec<String> {
        self.inner.tokens.iter().map(|t| t.lemma.clone()).collect()
    }

    #[getter]
    fn upos(&self) -> Vec<String> {
        self.inner.tokens.iter().map(|t| t.upos.clone()).collect()
    }

    #[getter]
    fn heads(&self) -> Vec<usize> {
        self.inner.tokens.iter().map(|t| t.head).collect()
    }

    #[getter]
    fn deprels(&self) -> Vec<String> {
        self.inner.tokens.iter().map(|t| t.deprel.clone()).collect()
    }

    fn comment(&self, key: &str) -> Option<String> {
        self.inner.comment_value(key).map(str::to_string)
    }

    fn to_conllu(&self) -> String {
        self.inner.to_string()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Sentence({:?})", self.inner.forms().join(" "))
    }
}

/// A shuffled, lemmatized tree with its reference forms.
#[pyclass(module = "pysrtk", name = "ShallowSentence", from_py_object)]
#[derive(Clone)]
struct ShallowSentence {
    inner: srtk::ShallowSentence,
}

#[pymethods]
impl ShallowSentence {
    #[getter]
    fn reference_forms(&self) -> Vec<String> {
        self.inner.reference_forms.clone()
    }

    /// `alignment[i]` is the reference position (1-based) of node `i + 1`.
    #[getter]
    fn alignment(&self) -> Option<Vec<usize>> {
        self.inner.alignment.clone()
    }

    #[getter]
    fn lemmas(&self) -> Vec<String> {
        self.inner.tree.node_ids().map(|id| self.inner.tree.payload(id).lemma.clone()).collect()
    }

    fn to_conllu(&self) -> String {
        self.inner.to_conllu().to_string()
    }

    #[pyo3(signature = (seed, scoped = false, lexicon = None))]
    fn linearize(&self, seed: u64, scoped: bool, lexicon: Option<PyRef<'_, FormLexicon>>) -> Vec<String> {
        let seq = linearize::linearize(&self.inner, seed, scoped);
        match lexicon {
            Some(lex) => append_form_list(&seq, &lex.inner, &self.inner.tree).tokens,
            None => seq.tokens,
        }
    }

    fn __len__(&self) -> usize {
        self.inner.tree.node_count()
    }
}

/// Candidate forms per `(lemma, upos, feats)`, counted over gold data.
#[pyclass(module = "pysrtk", name = "FormLexicon")]
struct FormLexicon {
    inner: rz::FormLexicon,
}

#[pymethods]
impl FormLexicon {
    #[new]
    fn new(gold: Vec<Sentence>) -> Self {
        FormLexicon { inner: rz::FormLexicon::build(gold.iter().map(|s| &s.inner)) }
    }

    #[pyo3(signature = (lemma, upos, feats = "_"))]
    fn candidates(&self, lemma: &str, upos: &str, feats: &str) -> Vec<(String, u64)> {
        self.inner
            .candidates(lemma, upos, &Attrs::parse(feats))
            .into_iter()
            .map(|c| (c.form, c.count))
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.lemma_count()
    }
}

/// Interpolated n-gram language model.
#[pyclass(module = "pysrtk", name = "NGramModel")]
struct NGramModel {
    inner: rz::NGramModel,
}

#[pymethods]
impl NGramModel {
    #[staticmethod]
    #[pyo3(signature = (references, order = rz::DEFAULT_ORDER, lam = rz::DEFAULT_LAMBDA))]
    fn train(references: Vec<Vec<String>>, order: usize, lam: f64) -> PyResult<Self> {
        Ok(NGramModel { inner: rz::NGramModel::train(&references, order, lam).map_err(value_error)? })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(NGramModel { inner: rz::NGramModel::from_text(text).map_err(value_error)? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn prob(&self, token: &str, history: Vec<String>) -> f64 {
        self.inner.prob(token, &history)
    }

    fn log_prob(&self, token: &str, history: Vec<String>) -> f64 {
        self.inner.log_prob(token, &history)
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }
}

#[pyfunction]
#[pyo3(signature = (text, strict = true))]
fn parse_conllu(text: &str, strict: bool) -> PyResult<Vec<Sentence>> {
    let corpus = srtk::parse_conllu(text, strict).map_err(value_error)?;
    Ok(corpus.sentences.into_iter().map(|inner| Sentence { inner }).collect())
}

#[pyfunction]
fn serialize_conllu(sentences: Vec<Sentence>) -> String {
    let inner: Vec<srtk::UdSentence> = sentences.into_iter().map(|s| s.inner).collect();
    srtk::serialize_conllu(&inner)
}

#[pyfunction]
#[pyo3(signature = (sentence, seed = 0))]
fn shallow_transform(sentence: &Sentence, seed: u64) -> PyResult<ShallowSentence> {
    Ok(ShallowSentence { inner: srtk::shallow_transform(&sentence.inner, seed).map_err(value_error)? })
}

/// Beam search under the n-gram model, or under the reference oracle when
/// `model` is omitted.
#[pyfunction]
#[pyo3(signature = (sentence, lexicon, model = None, beam = rz::DEFAULT_BEAM))]
fn realize(
    sentence: &ShallowSentence,
    lexicon: &FormLexicon,
    model: Option<PyRef<'_, NGramModel>>,
    beam: usize,
) -> PyResult<(Vec<String>, f64)> {
    let result = match model {
        Some(m) => rz::beam_realize(&sentence.inner, &m.inner, beam, &lexicon.inner),
        None => {
            let oracle = OracleScorer::new(&sentence.inner).map_err(value_error)?;
            rz::beam_realize(&sentence.inner, &oracle, beam, &lexicon.inner)
        }
    }
    .map_err(value_error)?;
    Ok((result.tokens, result.score))
}

#[pyfunction]
fn bleu4(hypotheses: Vec<Vec<String>>, references: Vec<Vec<String>>) -> Option<f64> {
    eval::bleu4(&hypotheses, &references)
}

#[pyfunction]
fn detokenize(tokens: Vec<String>) -> String {
    eval::detokenize(&tokens)
}

#[pyfunction]
fn retokenize(text: &str) -> Vec<String> {
    eval::retokenize(text)
}

/// Error category key of one hypothesis.
#[pyfunction]
#[pyo3(signature = (hypothesis, reference, lexicon = None))]
fn classify(hypothesis: Vec<String>, reference: &Sentence, lexicon: Option<PyRef<'_, FormLexicon>>) -> &'static str {
    eval::classify_output(&hypothesis, &reference.inner, lexicon.as_deref().map(|l| &l.inner)).key()
}

/// Full report as `key=value` lines.
#[pyfunction]
#[pyo3(signature = (hypotheses, references, detokenized = false, lexicon = None))]
fn evaluate(
    hypotheses: Vec<Vec<String>>,
    references: Vec<Sentence>,
    detokenized: bool,
    lexicon: Option<PyRef<'_, FormLexicon>>,
) -> PyResult<String> {
    let refs: Vec<srtk::UdSentence> = references.into_iter().map(|s| s.inner).collect();
    let mode = if detokenized { EvalMode::Detokenized } else { EvalMode::Tokenized };
    let report = eval::evaluate(&hypotheses, &refs, mode, lexicon.as_deref().map(|l| &l.inner)).map_err(value_error)?;
    Ok(report.to_kv())
}

#[pymodule]
fn pysrtk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Sentence>()?;
    m.add_class::<ShallowSentence>()?;
    m.add_class::<FormLexicon>()?;
    m.add_class::<NGramModel>()?;
    m.add_function(wrap_pyfunction!(parse_conllu, m)?)?;
    m.add_function(wrap_pyfunction!(serialize_conllu, m)?)?;
    m.add_function(wrap_pyfunction!(shallow_transform, m)?)?;
    m.add_function(wrap_pyfunction!(realize, m)?)?;
    m.add_function(wrap_pyfunction!(bleu4, m)?)?;
    m.add_function(wrap_pyfunction!(detokenize, m)?)?;
    m.add_function(wrap_pyfunction!(retokenize, m)?)?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
