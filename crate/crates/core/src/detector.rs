//! Commented-out code detection.
//!
//! A comment block is commented-out code when, with its markers stripped and
//! its common indentation removed, it parses as Python and the syntax tree
//! contains at least one non-trivial node. The verdict is all-or-nothing: the
//! whole block counts, or none of it does.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rustpython_parser::ast::{self, Arguments, Expr, Stmt};
use rustpython_parser::Parse;
use serde::{Deserialize, Serialize};

use crate::decimal::Decimal2;
use crate::source::{CommentBlock, LineSpan};
use crate::text::{indentation, is_blank};

/// Python syntax tree as produced by [`try_parse`]: the module's statements.
pub type SyntaxTree = Vec<Stmt>;

/// Strips one `#` marker (and one following space) from every line,
/// preserving leading whitespace.
pub fn uncomment(block: &CommentBlock) -> String {
    uncomment_lines(&block.lines).join("\n")
}

pub fn uncomment_lines<S: AsRef<str>>(lines: &[S]) -> Vec<String> {
    lines.iter().map(|l| uncomment_line(l.as_ref())).collect()
}

pub fn uncomment_line(line: &str) -> String {
    let indent = indentation(line);
    let body = &line[indent.len()..];
    let body = body.strip_prefix('#').unwrap_or(body);
    let body = body.strip_prefix(' ').unwrap_or(body);
    format!("{indent}{body}")
}

/// Removes the longest whitespace prefix shared by all non-blank lines.
/// Blank lines pass through unchanged.
pub fn normalize_indent(text: &str) -> String {
    let lines: Vec<&str> = text.split('\n').collect();
    let mut common: Option<&str> = None;
    for line in lines.iter().filter(|l| !is_blank(l)) {
        let lead = indentation(line);
        common = Some(match common {
            None => lead,
            Some(prev) => {
                let shared = prev
                    .char_indices()
                    .zip(lead.chars())
                    .find(|((_, a), b)| a != b)
                    .map_or(prev.len().min(lead.len()), |((i, _), _)| i);
                &prev[..shared]
            }
        });
    }
    let prefix = common.unwrap_or("");
    if prefix.is_empty() {
        return text.to_owned();
    }
    lines
        .iter()
        .map(|l| if is_blank(l) { *l } else { &l[prefix.len()..] })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Parses `text` as a Python module; `None` on any syntax error.
pub fn try_parse(text: &str) -> Option<SyntaxTree> {
    ast::Suite::parse(text, "<comment>").ok()
}

/// Every statement and expression kind of the Python grammar. `AnnAssign`
/// with no value is split out as `BareAnnotation`, since prose of the shape
/// `Note: deprecated` parses that way.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    FunctionDef,
    AsyncFunctionDef,
    ClassDef,
    Return,
    Delete,
    Assign,
    TypeAlias,
    AugAssign,
    AnnAssign,
    BareAnnotation,
    For,
    AsyncFor,
    While,
    If,
    With,
    AsyncWith,
    Match,
    Raise,
    Try,
    TryStar,
    Assert,
    Import,
    ImportFrom,
    Global,
    Nonlocal,
    ExprStmt,
    Pass,
    Break,
    Continue,
    BoolOp,
    NamedExpr,
    BinOp,
    UnaryOp,
    Lambda,
    IfExp,
    Dict,
    Set,
    ListComp,
    SetComp,
    DictComp,
    GeneratorExp,
    Await,
    Yield,
    YieldFrom,
    Compare,
    Call,
    FormattedValue,
    JoinedStr,
    Constant,
    Attribute,
    Subscript,
    Starred,
    Name,
    List,
    Tuple,
    Slice,
}

impl NodeKind {
    pub const ALL: [NodeKind; 56] = {
        use NodeKind::*;
        [
            FunctionDef, AsyncFunctionDef, ClassDef, Return, Delete, Assign, TypeAlias, AugAssign,
            AnnAssign, BareAnnotation, For, AsyncFor, While, If, With, AsyncWith, Match, Raise, Try,
            TryStar, Assert, Import, ImportFrom, Global, Nonlocal, ExprStmt, Pass, Break, Continue,
            BoolOp, NamedExpr, BinOp, UnaryOp, Lambda, IfExp, Dict, Set, ListComp, SetComp,
            DictComp, GeneratorExp, Await, Yield, YieldFrom, Compare, Call, FormattedValue,
            JoinedStr, Constant, Attribute, Subscript, Starred, Name, List, Tuple, Slice,
        ]
    };

    pub fn name(self) -> &'static str {
        use NodeKind::*;
        match self {
            FunctionDef => "FunctionDef",
            AsyncFunctionDef => "AsyncFunctionDef",
            ClassDef => "ClassDef",
            Return => "Return",
            Delete => "Delete",
            Assign => "Assign",
            TypeAlias => "TypeAlias",
            AugAssign => "AugAssign",
            AnnAssign => "AnnAssign",
            BareAnnotation => "BareAnnotation",
            For => "For",
            AsyncFor => "AsyncFor",
            While => "While",
            If => "If",
            With => "With",
            AsyncWith => "AsyncWith",
            Match => "Match",
            Raise => "Raise",
            Try => "Try",
            TryStar => "TryStar",
            Assert => "Assert",
            Import => "Import",
            ImportFrom => "ImportFrom",
            Global => "Global",
            Nonlocal => "Nonlocal",
            ExprStmt => "Expr",
            Pass => "Pass",
            Break => "Break",
            Continue => "Continue",
            BoolOp => "BoolOp",
            NamedExpr => "NamedExpr",
            BinOp => "BinOp",
            UnaryOp => "UnaryOp",
            Lambda => "Lambda",
            IfExp => "IfExp",
            Dict => "Dict",
            Set => "Set",
            ListComp => "ListComp",
            SetComp => "SetComp",
            DictComp => "DictComp",
            GeneratorExp => "GeneratorExp",
            Await => "Await",
            Yield => "Yield",
            YieldFrom => "YieldFrom",
            Compare => "Compare",
            Call => "Call",
            FormattedValue => "FormattedValue",
            JoinedStr => "JoinedStr",
            Constant => "Constant",
            Attribute => "Attribute",
            Subscript => "Subscript",
            Starred => "Starred",
            Name => "Name",
            List => "List",
            Tuple => "Tuple",
            Slice => "Slice",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown node kind {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Nontrivial,
    Trivial,
}

/// Maps every [`NodeKind`] to exactly one [`Classification`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationTable {
    classes: HashMap<NodeKind, Classification>,
}

impl Default for ClassificationTable {
    fn default() -> Self {
        use NodeKind::*;
        let trivial = [
            BareAnnotation, ExprStmt, Pass, BoolOp, BinOp, UnaryOp, IfExp, Dict, Set, Compare,
            FormattedValue, JoinedStr, Constant, Attribute, Starred, Name, List, Tuple, Slice,
        ];
        let classes = NodeKind::ALL
            .into_iter()
            .map(|k| {
                let class = if trivial.contains(&k) { Classification::Trivial } else { Classification::Nontrivial };
                (k, class)
            })
            .collect();
        ClassificationTable { classes }
    }
}

impl ClassificationTable {
    pub fn with(mut self, kind: NodeKind, class: Classification) -> Self {
        self.classes.insert(kind, class);
        self
    }

    pub fn classify(&self, kind: NodeKind) -> Classification {
        self.classes[&kind]
    }

    pub fn is_nontrivial_kind(&self, kind: NodeKind) -> bool {
        self.classify(kind) == Classification::Nontrivial
    }

    /// Applies by-name overrides, e.g. from a configuration file.
    pub fn with_overrides(mut self, nontrivial: &[String], trivial: &[String]) -> Result<Self, String> {
        for name in nontrivial {
            self = self.with(name.parse()?, Classification::Nontrivial);
        }
        for name in trivial {
            self = self.with(name.parse()?, Classification::Trivial);
        }
        Ok(self)
    }

    /// Kind-name → classification for display or serialization.
    pub fn entries(&self) -> BTreeMap<&'static str, Classification> {
        self.classes.iter().map(|(k, c)| (k.name(), *c)).collect()
    }
}

/// A borrowed syntax-tree node.
#[derive(Clone, Copy, Debug)]
pub enum Node<'a> {
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

impl<'a> Node<'a> {
    pub fn kind(self) -> NodeKind {
        match self {
            Node::Stmt(s) => stmt_kind(s),
            Node::Expr(e) => expr_kind(e),
        }
    }

    /// Direct children in source order.
    pub fn children(self) -> Vec<Node<'a>> {
        let mut out = Vec::new();
        match self {
            Node::Stmt(s) => stmt_children(s, &mut out),
            Node::Expr(e) => expr_children(e, &mut out),
        }
        out
    }
}

fn stmt_kind(stmt: &Stmt) -> NodeKind {
    use NodeKind as K;
    match stmt {
        Stmt::FunctionDef(_) => K::FunctionDef,
        Stmt::AsyncFunctionDef(_) => K::AsyncFunctionDef,
        Stmt::ClassDef(_) => K::ClassDef,
        Stmt::Return(_) => K::Return,
        Stmt::Delete(_) => K::Delete,
        Stmt::Assign(_) => K::Assign,
        Stmt::TypeAlias(_) => K::TypeAlias,
        Stmt::AugAssign(_) => K::AugAssign,
        Stmt::AnnAssign(a) if a.value.is_some() => K::AnnAssign,
        Stmt::AnnAssign(_) => K::BareAnnotation,
        Stmt::For(_) => K::For,
        Stmt::AsyncFor(_) => K::AsyncFor,
        Stmt::While(_) => K::While,
        Stmt::If(_) => K::If,
        Stmt::With(_) => K::With,
        Stmt::AsyncWith(_) => K::AsyncWith,
        Stmt::Match(_) => K::Match,
        Stmt::Raise(_) => K::Raise,
        Stmt::Try(_) => K::Try,
        Stmt::TryStar(_) => K::TryStar,
        Stmt::Assert(_) => K::Assert,
        Stmt::Import(_) => K::Import,
        Stmt::ImportFrom(_) => K::ImportFrom,
        Stmt::Global(_) => K::Global,
        Stmt::Nonlocal(_) => K::Nonlocal,
        Stmt::Expr(_) => K::ExprStmt,
        Stmt::Pass(_) => K::Pass,
        Stmt::Break(_) => K::Break,
        Stmt::Continue(_) => K::Continue,
    }
}

fn expr_kind(expr: &Expr) -> NodeKind {
    use NodeKind as K;
    match expr {
        Expr::BoolOp(_) => K::BoolOp,
        Expr::NamedExpr(_) => K::NamedExpr,
        Expr::BinOp(_) => K::BinOp,
        Expr::UnaryOp(_) => K::UnaryOp,
        Expr::Lambda(_) => K::Lambda,
        Expr::IfExp(_) => K::IfExp,
        Expr::Dict(_) => K::Dict,
        Expr::Set(_) => K::Set,
        Expr::ListComp(_) => K::ListComp,
        Expr::SetComp(_) => K::SetComp,
        Expr::DictComp(_) => K::DictComp,
        Expr::GeneratorExp(_) => K::GeneratorExp,
        Expr::Await(_) => K::Await,
        Expr::Yield(_) => K::Yield,
        Expr::YieldFrom(_) => K::YieldFrom,
        Expr::Compare(_) => K::Compare,
        Expr::Call(_) => K::Call,
        Expr::FormattedValue(_) => K::FormattedValue,
        Expr::JoinedStr(_) => K::JoinedStr,
        Expr::Constant(_) => K::Constant,
        Expr::Attribute(_) => K::Attribute,
        Expr::Subscript(_) => K::Subscript,
        Expr::Starred(_) => K::Starred,
        Expr::Name(_) => K::Name,
        Expr::List(_) => K::List,
        Expr::Tuple(_) => K::Tuple,
        Expr::Slice(_) => K::Slice,
    }
}

fn push_body<'a>(body: &'a [Stmt], out: &mut Vec<Node<'a>>) {
    out.extend(body.iter().map(Node::Stmt));
}

fn push_exprs<'a>(exprs: &'a [Expr], out: &mut Vec<Node<'a>>) {
    out.extend(exprs.iter().map(Node::Expr));
}

fn push_opt<'a>(expr: &'a Option<Box<Expr>>, out: &mut Vec<Node<'a>>) {
    if let Some(e) = expr {
        out.push(Node::Expr(e));
    }
}

fn push_arguments<'a>(args: &'a Arguments, out: &mut Vec<Node<'a>>) {
    for arg in args.posonlyargs.iter().chain(&args.args).chain(&args.kwonlyargs) {
        push_opt(&arg.def.annotation, out);
        push_opt(&arg.default, out);
    }
    for arg in args.vararg.iter().chain(&args.kwarg) {
        push_opt(&arg.annotation, out);
    }
}

fn stmt_children<'a>(stmt: &'a Stmt, out: &mut Vec<Node<'a>>) {
    match stmt {
        Stmt::FunctionDef(s) => {
            push_exprs(&s.decorator_list, out);
            push_arguments(&s.args, out);
            push_opt(&s.returns, out);
            push_body(&s.body, out);
        }
        Stmt::AsyncFunctionDef(s) => {
            push_exprs(&s.decorator_list, out);
            push_arguments(&s.args, out);
            push_opt(&s.returns, out);
            push_body(&s.body, out);
        }
        Stmt::ClassDef(s) => {
            push_exprs(&s.decorator_list, out);
            push_exprs(&s.bases, out);
            out.extend(s.keywords.iter().map(|k| Node::Expr(&k.value)));
            push_body(&s.body, out);
        }
        Stmt::Return(s) => push_opt(&s.value, out),
        Stmt::Delete(s) => push_exprs(&s.targets, out),
        Stmt::Assign(s) => {
            push_exprs(&s.targets, out);
            out.push(Node::Expr(&s.value));
        }
        Stmt::TypeAlias(s) => {
            out.push(Node::Expr(&s.name));
            out.push(Node::Expr(&s.value));
        }
        Stmt::AugAssign(s) => {
            out.push(Node::Expr(&s.target));
            out.push(Node::Expr(&s.value));
        }
        Stmt::AnnAssign(s) => {
            out.push(Node::Expr(&s.target));
            out.push(Node::Expr(&s.annotation));
            push_opt(&s.value, out);
        }
        Stmt::For(s) => {
            out.push(Node::Expr(&s.target));
            out.push(Node::Expr(&s.iter));
            push_body(&s.body, out);
            push_body(&s.orelse, out);
        }
        Stmt::AsyncFor(s) => {
            out.push(Node::Expr(&s.target));
            out.push(Node::Expr(&s.iter));
            push_body(&s.body, out);
            push_body(&s.orelse, out);
        }
        Stmt::While(s) => {
            out.push(Node::Expr(&s.test));
            push_body(&s.body, out);
            push_body(&s.orelse, out);
        }
        Stmt::If(s) => {
            out.push(Node::Expr(&s.test));
            push_body(&s.body, out);
            push_body(&s.orelse, out);
        }
        Stmt::With(s) => {
            for item in &s.items {
                out.push(Node::Expr(&item.context_expr));
                push_opt(&item.optional_vars, out);
            }
            push_body(&s.body, out);
        }
        Stmt::AsyncWith(s) => {
            for item in &s.items {
                out.push(Node::Expr(&item.context_expr));
                push_opt(&item.optional_vars, out);
            }
            push_body(&s.body, out);
        }
        Stmt::Match(s) => {
            out.push(Node::Expr(&s.subject));
            for case in &s.cases {
                push_opt(&case.guard, out);
                push_body(&case.body, out);
            }
        }
        Stmt::Raise(s) => {
            push_opt(&s.exc, out);
            push_opt(&s.cause, out);
        }
        Stmt::Try(s) => {
            push_body(&s.body, out);
            for ast::ExceptHandler::ExceptHandler(h) in &s.handlers {
                push_opt(&h.type_, out);
                push_body(&h.body, out);
            }
            push_body(&s.orelse, out);
            push_body(&s.finalbody, out);
        }
        Stmt::TryStar(s) => {
            push_body(&s.body, out);
            for ast::ExceptHandler::ExceptHandler(h) in &s.handlers {
                push_opt(&h.type_, out);
                push_body(&h.body, out);
            }
            push_body(&s.orelse, out);
            push_body(&s.finalbody, out);
        }
        Stmt::Assert(s) => {
            out.push(Node::Expr(&s.test));
            push_opt(&s.msg, out);
        }
        Stmt::Expr(s) => out.push(Node::Expr(&s.value)),
        Stmt::Import(_)
        | Stmt::ImportFrom(_)
        | Stmt::Global(_)
        | Stmt::Nonlocal(_)
        | Stmt::Pass(_)
        | Stmt::Break(_)
        | Stmt::Continue(_) => {}
    }
}

fn push_generators<'a>(generators: &'a [ast::Comprehension], out: &mut Vec<Node<'a>>) {
    for g in generators {
        out.push(Node::Expr(&g.target));
        out.push(Node::Expr(&g.iter));
        push_exprs(&g.ifs, out);
    }
}

fn expr_children<'a>(expr: &'a Expr, out: &mut Vec<Node<'a>>) {
    match expr {
        Expr::BoolOp(e) => push_exprs(&e.values, out),
        Expr::NamedExpr(e) => {
            out.push(Node::Expr(&e.target));
            out.push(Node::Expr(&e.value));
        }
        Expr::BinOp(e) => {
            out.push(Node::Expr(&e.left));
            out.push(Node::Expr(&e.right));
        }
        Expr::UnaryOp(e) => out.push(Node::Expr(&e.operand)),
        Expr::Lambda(e) => {
            push_arguments(&e.args, out);
            out.push(Node::Expr(&e.body));
        }
        Expr::IfExp(e) => {
            out.push(Node::Expr(&e.test));
            out.push(Node::Expr(&e.body));
            out.push(Node::Expr(&e.orelse));
        }
        Expr::Dict(e) => {
            for (k, v) in e.keys.iter().zip(&e.values) {
                if let Some(k) = k {
                    out.push(Node::Expr(k));
                }
                out.push(Node::Expr(v));
            }
        }
        Expr::Set(e) => push_exprs(&e.elts, out),
        Expr::ListComp(e) => {
            out.push(Node::Expr(&e.elt));
            push_generators(&e.generators, out);
        }
        Expr::SetComp(e) => {
            out.push(Node::Expr(&e.elt));
            push_generators(&e.generators, out);
        }
        Expr::DictComp(e) => {
            out.push(Node::Expr(&e.key));
            out.push(Node::Expr(&e.value));
            push_generators(&e.generators, out);
        }
        Expr::GeneratorExp(e) => {
            out.push(Node::Expr(&e.elt));
            push_generators(&e.generators, out);
        }
        Expr::Await(e) => out.push(Node::Expr(&e.value)),
        Expr::Yield(e) => push_opt(&e.value, out),
        Expr::YieldFrom(e) => out.push(Node::Expr(&e.value)),
        Expr::Compare(e) => {
            out.push(Node::Expr(&e.left));
            push_exprs(&e.comparators, out);
        }
        Expr::Call(e) => {
            out.push(Node::Expr(&e.func));
            push_exprs(&e.args, out);
            out.extend(e.keywords.iter().map(|k| Node::Expr(&k.value)));
        }
        Expr::FormattedValue(e) => {
            out.push(Node::Expr(&e.value));
            push_opt(&e.format_spec, out);
        }
        Expr::JoinedStr(e) => push_exprs(&e.values, out),
        Expr::Attribute(e) => out.push(Node::Expr(&e.value)),
        Expr::Subscript(e) => {
            out.push(Node::Expr(&e.value));
            out.push(Node::Expr(&e.slice));
        }
        Expr::Starred(e) => out.push(Node::Expr(&e.value)),
        Expr::List(e) => push_exprs(&e.elts, out),
        Expr::Tuple(e) => push_exprs(&e.elts, out),
        Expr::Slice(e) => {
            push_opt(&e.lower, out);
            push_opt(&e.upper, out);
            push_opt(&e.step, out);
        }
        Expr::Constant(_) | Expr::Name(_) => {}
    }
}

/// Pre-order search for the first node the table marks non-trivial.
pub fn first_nontrivial(node: Node<'_>, table: &ClassificationTable) -> Option<NodeKind> {
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        let kind = n.kind();
        if table.is_nontrivial_kind(kind) {
            return Some(kind);
        }
        let mut children = n.children();
        children.reverse();
        stack.extend(children);
    }
    None
}

/// Whether `node` is code-like: its own kind is non-trivial, or it is a
/// trivial wrapper (an expression statement, a bare annotation) whose
/// expression content contains a non-trivial node.
pub fn is_nontrivial(node: Node<'_>, table: &ClassificationTable) -> bool {
    first_nontrivial(node, table).is_some()
}

/// Outcome of running the detector over one comment block.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoVerdict {
    pub file: PathBuf,
    pub span: LineSpan,
    pub co_line_count: usize,
    pub parse_ok: bool,
    pub nontrivial_kind: Option<String>,
}

impl CoVerdict {
    pub fn is_co(&self) -> bool {
        self.co_line_count > 0
    }
}

/// The detector with its node-kind table.
#[derive(Clone, Debug, Default)]
pub struct Detector {
    table: ClassificationTable,
}

impl Detector {
    pub fn new(table: ClassificationTable) -> Self {
        Detector { table }
    }

    pub fn table(&self) -> &ClassificationTable {
        &self.table
    }

    pub fn verdict(&self, block: &CommentBlock) -> CoVerdict {
        let text = normalize_indent(&uncomment(block));
        let (parse_ok, kind) = match try_parse(&text) {
            None => (false, None),
            Some(tree) => (
                true,
                tree.iter().find_map(|stmt| first_nontrivial(Node::Stmt(stmt), &self.table)),
            ),
        };
        CoVerdict {
            file: block.file.clone(),
            span: block.span,
            co_line_count: if kind.is_some() { block.line_count() } else { 0 },
            parse_ok,
            nontrivial_kind: kind.map(|k| k.name().to_owned()),
        }
    }

    pub fn count_commented_code(&self, block: &CommentBlock) -> usize {
        self.verdict(block).co_line_count
    }
}

/// [`Detector::count_commented_code`] with the default table.
pub fn count_commented_code(block: &CommentBlock) -> usize {
    Detector::default().count_commented_code(block)
}

/// Verdicts for one file, attributed to its repository.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileVerdicts {
    pub repository: String,
    pub file: PathBuf,
    /// Full-line comment lines in the file (the comment-line denominator).
    pub comment_lines: usize,
    pub verdicts: Vec<CoVerdict>,
}

impl FileVerdicts {
    pub fn co_lines(&self) -> usize {
        self.verdicts.iter().map(|v| v.co_line_count).sum()
    }

    pub fn has_co(&self) -> bool {
        self.verdicts.iter().any(CoVerdict::is_co)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    Repository,
    File,
    CommentLine,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Repository, Granularity::File, Granularity::CommentLine];

    pub fn name(self) -> &'static str {
        match self {
            Granularity::Repository => "repository",
            Granularity::File => "file",
            Granularity::CommentLine => "comment_line",
        }
    }

    pub fn table_label(self) -> &'static str {
        match self {
            Granularity::Repository => "repository",
            Granularity::File => "Python file",
            Granularity::CommentLine => "comment line",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceRow {
    pub granularity: Granularity,
    pub with_co: u64,
    pub total: u64,
    pub ratio_pct: Decimal2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevalenceReport {
    pub rows: Vec<PrevalenceRow>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("no {granularity} units to compute a ratio over")]
pub struct EmptyTotal {
    pub granularity: &'static str,
}

/// `with / total` as a percentage, half-up to two decimals.
pub fn ratio_pct(with: u64, total: u64, granularity: Granularity) -> Result<Decimal2, EmptyTotal> {
    Decimal2::percent(with as i128, total as i128).ok_or(EmptyTotal {
        granularity: granularity.name(),
    })
}

impl PrevalenceRow {
    pub fn new(granularity: Granularity, with_co: u64, total: u64) -> Result<Self, EmptyTotal> {
        Ok(PrevalenceRow {
            granularity,
            with_co,
            total,
            ratio_pct: ratio_pct(with_co, total, granularity)?,
        })
    }
}

/// Proportions of CO code at repository, file, and comment-line level.
pub fn prevalence_stats(files: &[FileVerdicts]) -> Result<PrevalenceReport, EmptyTotal> {
    let repos: BTreeSet<&str> = files.iter().map(|f| f.repository.as_str()).collect();
    let co_repos: BTreeSet<&str> = files.iter().filter(|f| f.has_co()).map(|f| f.repository.as_str()).collect();
    let co_files = files.iter().filter(|f| f.has_co()).count() as u64;
    let co_lines: u64 = files.iter().map(|f| f.co_lines() as u64).sum();
    let comment_lines: u64 = files.iter().map(|f| f.comment_lines as u64).sum();
    Ok(PrevalenceReport {
        rows: vec![
            PrevalenceRow::new(Granularity::Repository, co_repos.len() as u64, repos.len() as u64)?,
            PrevalenceRow::new(Granularity::File, co_files, files.len() as u64)?,
            PrevalenceRow::new(Granularity::CommentLine, co_lines, comment_lines)?,
        ],
    })
}

impl PrevalenceReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("granularity,with_co,total,ratio_pct\n");
        for row in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", row.granularity.name(), row.with_co, row.total, row.ratio_pct));
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Granularity | With CO code | Total | Ratio(%) |\n|---|---|---|---|\n");
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} |\n",
                row.granularity.table_label(),
                row.with_co,
                row.total,
                row.ratio_pct
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::{extract_comment_blocks, SourceFile};
    use proptest::prelude::*;

    fn block(lines: &[&str]) -> CommentBlock {
        CommentBlock {
            file: "t.py".into(),
            span: LineSpan::with_len(1, lines.len()).unwrap(),
            lines: lines.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn uncomment_rules() {
        assert_eq!(uncomment(&block(&["# x = 1"])), "x = 1");
        assert_eq!(uncomment(&block(&["#x=1"])), "x=1");
        assert_eq!(uncomment(&block(&["    # for i in r:", "    #     f(i)"])), "    for i in r:\n        f(i)");
        assert_eq!(uncomment(&block(&["#  two"])), " two");
    }

    fn reference_strip(line: &str) -> String {
        // independent oracle: character walk, no helpers shared with uncomment_line
        let mut out = String::new();
        let mut chars = line.chars().peekable();
        while let Some(&c) = chars.peek() {
            if c == ' ' || c == '\t' {
                out.push(c);
                chars.next();
            } else {
                break;
            }
        }
        if chars.peek() == Some(&'#') {
            chars.next();
            if chars.peek() == Some(&' ') {
                chars.next();
            }
        }
        out.extend(chars);
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn uncomment_matches_line_at_a_time_oracle(lines in proptest::collection::vec("[ \t]{0,4}#[ ]{0,2}[a-z=() ]{0,10}", 1..6)) {
            let b = CommentBlock { file: "t.py".into(), span: LineSpan::with_len(1, lines.len()).unwrap(), lines: lines.clone() };
            let expected: Vec<String> = lines.iter().map(|l| reference_strip(l)).collect();
            prop_assert_eq!(uncomment(&b), expected.join("\n"));
        }
    }

    #[test]
    fn normalize_indent_examples() {
        assert_eq!(normalize_indent("    a\n      b"), "a\n  b");
        assert_eq!(normalize_indent("a\n  b"), "a\n  b");
        assert_eq!(normalize_indent("    a\n\n    b"), "a\n\nb");
        assert_eq!(normalize_indent("    a\n  \n    b"), "a\n  \nb");
        assert_eq!(normalize_indent("\ta\n  b"), "\ta\n  b");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn normalize_indent_is_idempotent(lines in proptest::collection::vec("[ \t]{0,6}[a-z]{0,5}", 0..8)) {
            let text = lines.join("\n");
            let once = normalize_indent(&text);
            prop_assert_eq!(normalize_indent(&once), once.clone());
            prop_assert_eq!(once.split('\n').count(), text.split('\n').count());
        }
    }

    #[test]
    fn parse_examples() {
        assert!(try_parse("for i in range(3):\n    pass").is_some());
        assert!(try_parse("fix this bug").is_none());
        assert_eq!(try_parse("").map(|t| t.len()), Some(0));
    }

    fn first_stmt_nontrivial(src: &str) -> bool {
        let tree = try_parse(src).unwrap();
        is_nontrivial(Node::Stmt(&tree[0]), &ClassificationTable::default())
    }

    #[test]
    fn node_classification() {
        assert!(first_stmt_nontrivial("for i in x:\n    pass"));
        assert!(!first_stmt_nontrivial("TODO"));
        assert!(first_stmt_nontrivial("print(i)"));
        assert!(!first_stmt_nontrivial("cost-benefit"));
        assert!(!first_stmt_nontrivial("pass"));
        assert!(!first_stmt_nontrivial("Note: deprecated"));
        assert!(first_stmt_nontrivial("x: List[int]"));
        assert!(first_stmt_nontrivial("counter: int = 0"));
        assert!(first_stmt_nontrivial("items[0]"));
    }

    #[test]
    fn table_is_total_and_overridable() {
        let table = ClassificationTable::default();
        assert_eq!(table.entries().len(), NodeKind::ALL.len());
        let strict = table.with_overrides(&[], &["Assign".to_owned()]).unwrap();
        let b = block(&["# x = 1"]);
        assert_eq!(Detector::new(strict).count_commented_code(&b), 0);
        assert!(ClassificationTable::default().with_overrides(&["Bogus".into()], &[]).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_commented_code(&block(&["# TODO"])), 0);
        assert_eq!(count_commented_code(&block(&["# for i in range(10):", "#     print(i)"])), 2);
        assert_eq!(count_commented_code(&block(&["# broken ( syntax"])), 0);
        assert_eq!(count_commented_code(&block(&["#"])), 0);
    }

    #[test]
    fn verdict_reports_kind() {
        let v = Detector::default().verdict(&block(&["# print(x)"]));
        assert!(v.parse_ok);
        assert_eq!(v.nontrivial_kind.as_deref(), Some("Call"));
        let v = Detector::default().verdict(&block(&["# just words here"]));
        assert!(!v.parse_ok && v.nontrivial_kind.is_none());
    }

    proptest! {
        #[test]
        fn count_is_zero_or_block_len(lines in proptest::collection::vec("# [a-z(): =]{0,12}", 1..5)) {
            let b = CommentBlock { file: "t.py".into(), span: LineSpan::with_len(1, lines.len()).unwrap(), lines: lines.clone() };
            let n = count_commented_code(&b);
            prop_assert!(n == 0 || n == lines.len());
        }
    }

    #[test]
    fn prevalence_examples() {
        assert_eq!(ratio_pct(5418, 6403, Granularity::Repository).unwrap().to_string(), "84.62");
        assert_eq!(ratio_pct(0, 10, Granularity::File).unwrap().to_string(), "0.00");
        assert_eq!(ratio_pct(132886, 1015407, Granularity::File).unwrap().to_string(), "13.09");
        assert!(ratio_pct(1, 0, Granularity::CommentLine).is_err());
    }

    #[test]
    fn prevalence_counts_granularities() {
        let detector = Detector::default();
        let mk = |repo: &str, path: &str, text: &str| {
            let file = SourceFile::new(path, text);
            let blocks = extract_comment_blocks(&file);
            FileVerdicts {
                repository: repo.into(),
                file: path.into(),
                comment_lines: blocks.iter().map(|b| b.line_count()).sum(),
                verdicts: blocks.iter().map(|b| detector.verdict(b)).collect(),
            }
        };
        let files = vec![
            mk("r1", "r1/a.py", "x = 1\n# y = 2\n# z = 3\n\n# prose here\n"),
            mk("r1", "r1/b.py", "x = 1\n"),
            mk("r2", "r2/c.py", "# just words\n"),
        ];
        let report = prevalence_stats(&files).unwrap();
        let got: Vec<(u64, u64)> = report.rows.iter().map(|r| (r.with_co, r.total)).collect();
        assert_eq!(got, vec![(1, 2), (1, 3), (2, 4)]);
        assert!(report.to_csv().starts_with("granularity,with_co,total,ratio_pct\nrepository,1,2,50.00\n"));
        assert!(prevalence_stats(&[]).is_err());
    }
}
