//! Structural Verilog subset: module headers, port and wire declarations, and
//! named-port instantiations. Anything behavioral is rejected with its line.
//!
//! Leaf cells and macros are modules that appear in the geometry sidecar;
//! modules defined in the source are flattened, with instance names joined by
//! `/` and the instance path recorded as the hierarchy path. Top-level ports
//! become zero-area IO pads.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    Instance, InstanceId, Master, MasterId, MasterKind, Net, NetId, Netlist, NetlistError,
    PinDir, PinOffset, PinRef,
};
use crate::geom::{Outline, Side};

/// Geometry that a structural netlist does not carry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySidecar {
    pub outline: Outline,
    pub masters: Vec<Master>,
    /// Top module; inferred when exactly one module is never instantiated.
    #[serde(default)]
    pub top: Option<String>,
    /// Outline side per top-level port. Unlisted inputs go west, outputs east, inouts south.
    #[serde(default)]
    pub io_sides: BTreeMap<String, Side>,
}

const BEHAVIORAL: &[&str] = &[
    "always",
    "always_ff",
    "always_comb",
    "always_latch",
    "initial",
    "assign",
    "reg",
    "logic",
    "integer",
    "real",
    "function",
    "task",
    "generate",
    "genvar",
    "if",
    "case",
    "for",
    "while",
    "begin",
    "parameter",
    "localparam",
    "defparam",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Sym(char),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
}

fn tokenize(text: &str) -> Result<Vec<Token>, NetlistError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let syntax = |line, message: &str| NetlistError::VerilogSyntax {
        line,
        message: message.to_string(),
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'*') {
            let start = line;
            i += 2;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(start, "unterminated block comment")),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => line += 1,
                    _ => {}
                }
                i += 1;
            }
        } else if c == '(' && chars.get(i + 1) == Some(&'*') && chars.get(i + 2) != Some(&')') {
            // attribute instance `(* ... *)`
            let start = line;
            i += 2;
            loop {
                match chars.get(i) {
                    None => return Err(syntax(start, "unterminated attribute")),
                    Some('*') if chars.get(i + 1) == Some(&')') => {
                        i += 2;
                        break;
                    }
                    Some('\n') => line += 1,
                    _ => {}
                }
                i += 1;
            }
        } else if c == '\\' {
            let start = i + 1;
            i += 1;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
            });
        } else if c.is_ascii_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len()
                && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '$')
            {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line,
            });
        } else if c.is_ascii_digit() || c == '\'' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '_') {
                i += 1;
            }
            if chars.get(i) == Some(&'\'') {
                i += 1;
                if matches!(chars.get(i), Some('s' | 'S')) {
                    i += 1;
                }
                if matches!(
                    chars.get(i),
                    Some('b' | 'B' | 'o' | 'O' | 'd' | 'D' | 'h' | 'H')
                ) {
                    i += 1;
                }
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '?') {
                    i += 1;
                }
            }
            out.push(Token {
                tok: Tok::Number(chars[start..i].iter().collect()),
                line,
            });
        } else {
            out.push(Token {
                tok: Tok::Sym(c),
                line,
            });
            i += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Expr {
    Whole(String),
    Bit(String, i64),
    Part(String, i64, i64),
    Const(usize),
    Concat(Vec<Expr>),
}

#[derive(Debug, Clone, Copy)]
struct Range {
    msb: i64,
    lsb: i64,
}

impl Range {
    /// Bit indices in declaration order, msb first.
    fn indices(range: Option<Range>) -> Vec<Option<i64>> {
        match range {
            None => vec![None],
            Some(r) if r.msb >= r.lsb => (r.lsb..=r.msb).rev().map(Some).collect(),
            Some(r) => (r.msb..=r.lsb).map(Some).collect(),
        }
    }
}

#[derive(Debug)]
struct InstDef {
    master: String,
    name: String,
    conns: Vec<(String, Option<Expr>)>,
    line: usize,
}

#[derive(Debug, Default)]
struct ModuleDef {
    name: String,
    ports: Vec<String>,
    dirs: HashMap<String, PinDir>,
    ranges: HashMap<String, Option<Range>>,
    /// Declaration order of nets that are not ports.
    wires: Vec<String>,
    instances: Vec<InstDef>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(0, |t| t.line)
    }

    fn err(&self, message: impl Into<String>) -> NetlistError {
        NetlistError::VerilogSyntax {
            line: self.line(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Result<Tok, NetlistError> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.tok.clone())
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), NetlistError> {
        if self.eat_sym(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, NetlistError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                Err(self.err(format!("expected identifier, found {other:?}")))
            }
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == word)
    }

    fn integer(&mut self) -> Result<i64, NetlistError> {
        match self.next()? {
            Tok::Number(s) if !s.contains('\'') => s
                .replace('_', "")
                .parse()
                .map_err(|_| self.err(format!("bad integer `{s}`"))),
            other => Err(self.err(format!("expected integer, found {other:?}"))),
        }
    }

    fn check_behavioral(&self) -> Result<(), NetlistError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if BEHAVIORAL.contains(&s.as_str()) || s.starts_with('$') {
                return Err(NetlistError::UnsupportedConstruct {
                    line: self.line(),
                    construct: s.clone(),
                });
            }
        }
        Ok(())
    }

    /// Skips a balanced `( ... )` group, used for parameter overrides.
    fn skip_parens(&mut self) -> Result<(), NetlistError> {
        self.expect_sym('(')?;
        let mut depth = 1;
        while depth > 0 {
            match self.next()? {
                Tok::Sym('(') => depth += 1,
                Tok::Sym(')') => depth -= 1,
                _ => {}
            }
        }
        Ok(())
    }

    fn range(&mut self) -> Result<Option<Range>, NetlistError> {
        if !self.eat_sym('[') {
            return Ok(None);
        }
        let msb = self.integer()?;
        self.expect_sym(':')?;
        let lsb = self.integer()?;
        self.expect_sym(']')?;
        Ok(Some(Range { msb, lsb }))
    }

    fn direction(&mut self) -> Option<PinDir> {
        let dir = match self.peek() {
            Some(Tok::Ident(s)) if s == "input" => PinDir::Input,
            Some(Tok::Ident(s)) if s == "output" => PinDir::Output,
            Some(Tok::Ident(s)) if s == "inout" => PinDir::Inout,
            _ => return None,
        };
        self.pos += 1;
        Some(dir)
    }

    fn file(&mut self) -> Result<Vec<ModuleDef>, NetlistError> {
        let mut modules = Vec::new();
        while self.peek().is_some() {
            if self.is_ident("module") {
                modules.push(self.module()?);
            } else {
                self.check_behavioral()?;
                return Err(self.err("expected `module`"));
            }
        }
        Ok(modules)
    }

    fn module(&mut self) -> Result<ModuleDef, NetlistError> {
        self.pos += 1;
        let mut m = ModuleDef {
            name: self.ident()?,
            ..Default::default()
        };
        if self.eat_sym('#') {
            self.skip_parens()?;
        }
        if self.eat_sym('(') && !self.eat_sym(')') {
            // Either a bare name list or ANSI declarations; direction and range carry over.
            let mut dir = None;
            let mut range = None;
            loop {
                if let Some(d) = self.direction() {
                    dir = Some(d);
                    if self.is_ident("wire") {
                        self.pos += 1;
                    }
                    self.check_behavioral()?;
                    range = self.range()?;
                }
                let name = self.ident()?;
                if let Some(d) = dir {
                    m.dirs.insert(name.clone(), d);
                    m.ranges.insert(name.clone(), range);
                }
                m.ports.push(name);
                if self.eat_sym(')') {
                    break;
                }
                self.expect_sym(',')?;
            }
        }
        self.expect_sym(';')?;

        loop {
            self.check_behavioral()?;
            if self.is_ident("endmodule") {
                self.pos += 1;
                break;
            }
            if self.peek().is_none() {
                return Err(self.err(format!("module `{}` is missing `endmodule`", m.name)));
            }
            if let Some(dir) = self.direction() {
                if self.is_ident("wire") {
                    self.pos += 1;
                }
                self.check_behavioral()?;
                let range = self.range()?;
                for name in self.name_list()? {
                    m.dirs.insert(name.clone(), dir);
                    m.ranges.insert(name, range);
                }
            } else if self.is_ident("wire") || self.is_ident("tri") {
                self.pos += 1;
                let range = self.range()?;
                for name in self.name_list()? {
                    if !m.ports.contains(&name) && !m.ranges.contains_key(&name) {
                        m.wires.push(name.clone());
                    }
                    m.ranges.entry(name).or_insert(range);
                }
            } else {
                let inst = self.instantiation()?;
                m.instances.push(inst);
            }
        }
        Ok(m)
    }

    fn name_list(&mut self) -> Result<Vec<String>, NetlistError> {
        let mut names = vec![self.ident()?];
        while self.eat_sym(',') {
            names.push(self.ident()?);
        }
        self.expect_sym(';')?;
        Ok(names)
    }

    fn instantiation(&mut self) -> Result<InstDef, NetlistError> {
        let line = self.line();
        let master = self.ident()?;
        if self.eat_sym('#') {
            self.skip_parens()?;
        }
        let name = self.ident()?;
        if self.peek() == Some(&Tok::Sym('[')) {
            return Err(NetlistError::UnsupportedConstruct {
                line: self.line(),
                construct: "instance array".into(),
            });
        }
        self.expect_sym('(')?;
        let mut conns = Vec::new();
        if !self.eat_sym(')') {
            loop {
                if !self.eat_sym('.') {
                    return Err(NetlistError::UnsupportedConstruct {
                        line: self.line(),
                        construct: "positional port connection".into(),
                    });
                }
                let formal = self.ident()?;
                self.expect_sym('(')?;
                let actual = if self.eat_sym(')') {
                    None
                } else {
                    let e = self.expr()?;
                    self.expect_sym(')')?;
                    Some(e)
                };
                conns.push((formal, actual));
                if self.eat_sym(')') {
                    break;
                }
                self.expect_sym(',')?;
            }
        }
        self.expect_sym(';')?;
        Ok(InstDef {
            master,
            name,
            conns,
            line,
        })
    }

    fn expr(&mut self) -> Result<Expr, NetlistError> {
        match self.next()? {
            Tok::Sym('{') => {
                let mut parts = vec![self.expr()?];
                while self.eat_sym(',') {
                    parts.push(self.expr()?);
                }
                self.expect_sym('}')?;
                Ok(Expr::Concat(parts))
            }
            Tok::Number(s) => {
                let width = match s.split_once('\'') {
                    Some((w, _)) if !w.is_empty() => w.replace('_', "").parse().unwrap_or(1),
                    _ => 1,
                };
                Ok(Expr::Const(width))
            }
            Tok::Ident(name) => {
                if !self.eat_sym('[') {
                    return Ok(Expr::Whole(name));
                }
                let a = self.integer()?;
                if self.eat_sym(':') {
                    let b = self.integer()?;
                    self.expect_sym(']')?;
                    Ok(Expr::Part(name, a, b))
                } else {
                    self.expect_sym(']')?;
                    Ok(Expr::Bit(name, a))
                }
            }
            other => Err(self.err(format!("unexpected {other:?} in port connection"))),
        }
    }
}

struct Signal {
    indices: Vec<Option<i64>>,
    bits: Vec<Option<usize>>,
}

struct BitNet {
    base: String,
    index: Option<u32>,
    conns: Vec<(InstanceId, String, PinDir)>,
}

struct Elaborator<'a> {
    modules: HashMap<&'a str, &'a ModuleDef>,
    masters: Vec<Master>,
    master_ids: HashMap<String, MasterId>,
    instances: Vec<Instance>,
    bits: Vec<BitNet>,
    io_side: BTreeMap<InstanceId, Side>,
    active: HashSet<String>,
}

impl<'a> Elaborator<'a> {
    fn new_bit(&mut self, base: &str, index: Option<i64>) -> usize {
        self.bits.push(BitNet {
            base: base.to_string(),
            index: index.and_then(|i| u32::try_from(i).ok()),
            conns: Vec::new(),
        });
        self.bits.len() - 1
    }

    fn declare(&mut self, prefix: &str, name: &str, range: Option<Range>) -> Signal {
        let indices = Range::indices(range);
        let base = format!("{prefix}{name}");
        let bits = indices.iter().map(|&i| Some(self.new_bit(&base, i))).collect();
        Signal { indices, bits }
    }

    fn eval(
        &mut self,
        expr: &Expr,
        scope: &mut HashMap<String, Signal>,
        prefix: &str,
        line: usize,
    ) -> Result<Vec<Option<usize>>, NetlistError> {
        let oob = |name: &str, i: i64| NetlistError::VerilogSyntax {
            line,
            message: format!("index {i} out of range for `{name}`"),
        };
        let mut lookup = |name: &str, this: &mut Self| {
            if !scope.contains_key(name) {
                let sig = this.declare(prefix, name, None);
                scope.insert(name.to_string(), sig);
            }
        };
        Ok(match expr {
            Expr::Const(w) => vec![None; *w],
            Expr::Concat(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(self.eval(p, scope, prefix, line)?);
                }
                out
            }
            Expr::Whole(name) => {
                lookup(name, self);
                scope[name.as_str()].bits.clone()
            }
            Expr::Bit(name, i) => {
                lookup(name, self);
                let sig = &scope[name.as_str()];
                let pos = sig
                    .indices
                    .iter()
                    .position(|&x| x == Some(*i))
                    .ok_or_else(|| oob(name, *i))?;
                vec![sig.bits[pos]]
            }
            Expr::Part(name, a, b) => {
                lookup(name, self);
                let sig = &scope[name.as_str()];
                let step: i64 = if a >= b { -1 } else { 1 };
                let mut out = Vec::new();
                let mut i = *a;
                loop {
                    let pos = sig
                        .indices
                        .iter()
                        .position(|&x| x == Some(i))
                        .ok_or_else(|| oob(name, i))?;
                    out.push(sig.bits[pos]);
                    if i == *b {
                        break;
                    }
                    i += step;
                }
                out
            }
        })
    }

    fn elaborate(
        &mut self,
        module: &ModuleDef,
        path: Vec<String>,
        prefix: &str,
        mut scope: HashMap<String, Signal>,
    ) -> Result<(), NetlistError> {
        for name in &module.wires {
            if !scope.contains_key(name) {
                let sig = self.declare(prefix, name, module.ranges[name]);
                scope.insert(name.clone(), sig);
            }
        }
        for inst in &module.instances {
            let inst_name = format!("{prefix}{}", inst.name);
            let mut actuals = Vec::with_capacity(inst.conns.len());
            for (formal, expr) in &inst.conns {
                let bits = match expr {
                    Some(e) => self.eval(e, &mut scope, prefix, inst.line)?,
                    None => Vec::new(),
                };
                actuals.push((formal.clone(), bits));
            }

            if let Some(child) = self.modules.get(inst.master.as_str()).copied() {
                if !self.active.insert(child.name.clone()) {
                    return Err(NetlistError::VerilogSyntax {
                        line: inst.line,
                        message: format!("recursive instantiation of `{}`", child.name),
                    });
                }
                let child_prefix = format!("{inst_name}/");
                let mut child_scope = HashMap::new();
                for (formal, bits) in actuals {
                    if !child.dirs.contains_key(&formal) {
                        return Err(NetlistError::VerilogSyntax {
                            line: inst.line,
                            message: format!("module `{}` has no port `{formal}`", child.name),
                        });
                    }
                    let indices = Range::indices(child.ranges[&formal]);
                    // Align at the least significant end; missing bits stay unconnected.
                    let mut port_bits = vec![None; indices.len()];
                    for (dst, src) in port_bits.iter_mut().rev().zip(bits.iter().rev()) {
                        *dst = *src;
                    }
                    child_scope.insert(
                        formal,
                        Signal {
                            indices,
                            bits: port_bits,
                        },
                    );
                }
                for port in &child.ports {
                    if !child_scope.contains_key(port) {
                        let range = child.ranges.get(port).copied().flatten();
                        let sig = self.declare(&child_prefix, port, range);
                        child_scope.insert(port.clone(), sig);
                    }
                }
                let mut child_path = path.clone();
                child_path.push(inst.name.clone());
                self.elaborate(child, child_path, &child_prefix, child_scope)?;
                self.active.remove(&child.name);
                continue;
            }

            let master_id = *self.master_ids.get(&inst.master).ok_or_else(|| {
                NetlistError::UnknownMaster {
                    instance: inst_name.clone(),
                    master: inst.master.clone(),
                }
            })?;
            let id = InstanceId(self.instances.len());
            self.instances.push(Instance {
                id,
                name: inst_name.clone(),
                master: master_id,
                hierarchy_path: path.clone(),
            });
            for (formal, bits) in actuals {
                let dir = match self.masters[master_id.0].pin(&formal) {
                    Some(p) => p.dir,
                    None => {
                        return Err(NetlistError::DanglingPin {
                            net: String::from("<port connection>"),
                            instance: inst_name,
                            pin: formal,
                        })
                    }
                };
                for bit in bits.into_iter().flatten() {
                    self.bits[bit].conns.push((id, formal.clone(), dir));
                }
            }
        }
        Ok(())
    }

    fn pad_master(&mut self, dir: PinDir) -> MasterId {
        let name = match dir {
            PinDir::Output => "__io_in__",
            PinDir::Input => "__io_out__",
            PinDir::Inout => "__io_inout__",
        };
        if let Some(&id) = self.master_ids.get(name) {
            return id;
        }
        let id = MasterId(self.masters.len());
        self.masters.push(Master {
            name: name.to_string(),
            width: 0.0,
            height: 0.0,
            pin_offsets: vec![PinOffset {
                name: "P".into(),
                dx: 0.0,
                dy: 0.0,
                dir,
            }],
            kind: MasterKind::IoPad,
        });
        self.master_ids.insert(name.to_string(), id);
        id
    }
}

fn pick_top<'a>(modules: &'a [ModuleDef], wanted: Option<&str>) -> Result<&'a ModuleDef, NetlistError> {
    if let Some(name) = wanted {
        return modules
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| NetlistError::VerilogSyntax {
                line: 0,
                message: format!("top module `{name}` not found"),
            });
    }
    let used: HashSet<&str> = modules
        .iter()
        .flat_map(|m| m.instances.iter().map(|i| i.master.as_str()))
        .collect();
    let roots: Vec<&ModuleDef> = modules.iter().filter(|m| !used.contains(m.name.as_str())).collect();
    match roots.as_slice() {
        [top] => Ok(top),
        [] => Err(NetlistError::VerilogSyntax {
            line: 0,
            message: "no top module found".into(),
        }),
        _ => Err(NetlistError::VerilogSyntax {
            line: 0,
            message: format!(
                "ambiguous top module ({}); set `top` in the geometry sidecar",
                roots.iter().map(|m| m.name.as_str()).collect::<Vec<_>>().join(", ")
            ),
        }),
    }
}

/// Parses a structural Verilog source into a scalar-net [`Netlist`].
///
/// Every net bit becomes its own net named `base[i]`; run
/// [`bundle_buses`](super::bundle_buses) afterwards to recover bus widths.
pub fn parse_verilog_subset(text: &str, sidecar: &GeometrySidecar) -> Result<Netlist, NetlistError> {
    let toks = tokenize(text)?;
    let modules = Parser { toks, pos: 0 }.file()?;
    let top = pick_top(&modules, sidecar.top.as_deref())?;

    let mut el = Elaborator {
        modules: modules.iter().map(|m| (m.name.as_str(), m)).collect(),
        masters: sidecar.masters.clone(),
        master_ids: sidecar
            .masters
            .iter()
            .enumerate()
            .map(|(i, m)| (m.name.clone(), MasterId(i)))
            .collect(),
        instances: Vec::new(),
        bits: Vec::new(),
        io_side: BTreeMap::new(),
        active: HashSet::from([top.name.clone()]),
    };

    let mut scope = HashMap::new();
    for port in &top.ports {
        let port_dir = *top.dirs.get(port).ok_or_else(|| NetlistError::VerilogSyntax {
            line: 0,
            message: format!("port `{port}` of `{}` has no direction", top.name),
        })?;
        // The pad drives what the design reads, and vice versa.
        let pad_dir = match port_dir {
            PinDir::Input => PinDir::Output,
            PinDir::Output => PinDir::Input,
            PinDir::Inout => PinDir::Inout,
        };
        let master = el.pad_master(pad_dir);
        let id = InstanceId(el.instances.len());
        el.instances.push(Instance {
            id,
            name: port.clone(),
            master,
            hierarchy_path: vec![top.name.clone()],
        });
        let side = sidecar.io_sides.get(port).copied().unwrap_or(match port_dir {
            PinDir::Input => Side::W,
            PinDir::Output => Side::E,
            PinDir::Inout => Side::S,
        });
        el.io_side.insert(id, side);
        let sig = el.declare("", port, top.ranges.get(port).copied().flatten());
        for bit in sig.bits.iter().flatten() {
            el.bits[*bit].conns.push((id, "P".into(), pad_dir));
        }
        scope.insert(port.clone(), sig);
    }
    el.elaborate(top, vec![top.name.clone()], "", scope)?;

    let mut nets = Vec::new();
    for bit in el.bits {
        if bit.conns.len() < 2 {
            continue;
        }
        let driver_at = bit
            .conns
            .iter()
            .position(|c| c.2 == PinDir::Output)
            .or_else(|| bit.conns.iter().position(|c| c.2 == PinDir::Inout))
            .unwrap_or(0);
        let mut conns: Vec<PinRef> = bit
            .conns
            .into_iter()
            .map(|(inst, pin, _)| PinRef::new(inst, pin))
            .collect();
        let driver = conns.remove(driver_at);
        nets.push(Net {
            id: NetId(nets.len()),
            base_name: bit.base,
            bit_index: bit.index,
            driver,
            sinks: conns,
            bit_width: 1,
        });
    }

    let netlist = Netlist {
        outline: sidecar.outline,
        masters: el.masters,
        instances: el.instances,
        nets,
        io_side: el.io_side,
    };
    netlist.validate()?;
    Ok(netlist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::bundle_buses;

    fn sidecar() -> GeometrySidecar {
        serde_json::from_str(
            r#"{
              "outline": {"width": 100, "height": 100},
              "masters": [
                {"name": "INV", "width": 1, "height": 1, "kind": "cell",
                 "pin_offsets": [{"name": "A", "dx": 0, "dy": 0.5},
                                 {"name": "Y", "dx": 1, "dy": 0.5, "dir": "output"}]},
                {"name": "RAM", "width": 10, "height": 8, "kind": "macro",
                 "pin_offsets": [{"name": "D", "dx": 0, "dy": 4},
                                 {"name": "Q", "dx": 10, "dy": 4, "dir": "output"}]}
              ]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn two_leaf_instances_one_wire() {
        let src = "module top;\n  wire w;\n  INV u1 (.A(), .Y(w));\n  INV u2 (.A(w), .Y());\nendmodule\n";
        let n = parse_verilog_subset(src, &sidecar()).unwrap();
        assert_eq!(n.instances.len(), 2);
        assert_eq!(n.nets.len(), 1);
        assert_eq!(n.instances[n.nets[0].driver.instance.0].name, "u1");
        assert_eq!(n.nets[0].sinks.len(), 1);
    }

    #[test]
    fn always_block_is_unsupported_with_line() {
        let src = "module top;\n  wire w;\n  always @(posedge w) begin end\nendmodule\n";
        match parse_verilog_subset(src, &sidecar()) {
            Err(NetlistError::UnsupportedConstruct { line, construct }) => {
                assert_eq!(line, 3);
                assert_eq!(construct, "always");
            }
            other => panic!("expected UnsupportedConstruct, got {other:?}"),
        }
    }

    #[test]
    fn unknown_master() {
        let src = "module top;\n  NAND2 u1 (.A());\nendmodule\n";
        assert!(matches!(
            parse_verilog_subset(src, &sidecar()),
            Err(NetlistError::UnknownMaster { master, .. }) if master == "NAND2"
        ));
    }

    #[test]
    fn hierarchy_ports_and_buses_flatten() {
        let src = r#"
            // two-level design
            module bank(input [3:0] d, output [3:0] q);
              RAM mem (.D(d), .Q(q));
            endmodule
            module top(input [3:0] din, output [3:0] dout);
              wire [3:0] mid;
              (* keep *) bank b0 (.d(din), .q(mid));
              INV u0 (.A(mid[0]), .Y(dout[0]));
              INV u1 (.A(mid[1]), .Y(dout[1]));
            endmodule
        "#;
        let n = parse_verilog_subset(src, &sidecar()).unwrap();
        let names: Vec<&str> = n.instances.iter().map(|i| i.name.as_str()).collect();
        assert_eq!(names, ["din", "dout", "b0/mem", "u0", "u1"]);
        assert_eq!(n.instances[2].hierarchy_path, ["top", "b0"]);
        assert_eq!(n.io_side[&InstanceId(0)], Side::W);
        assert_eq!(n.io_side[&InstanceId(1)], Side::E);

        // din[3:0] pad -> RAM.D carries 4 bits; mid[1:0] RAM.Q -> INV.
        let b = bundle_buses(&n);
        let din = b.nets.iter().find(|n| n.base_name == "din").unwrap();
        assert_eq!(din.bit_width, 4);
        assert_eq!(b.instances[din.driver.instance.0].name, "din");
        let mids: Vec<_> = b.nets.iter().filter(|n| n.base_name == "mid").collect();
        assert_eq!(mids.len(), 2, "different sinks keep mid bits apart");
        assert!(mids.iter().all(|m| b.instances[m.driver.instance.0].name == "b0/mem"));
    }

    #[test]
    fn positional_connections_are_unsupported() {
        let src = "module top;\n  wire a;\n  INV u1 (a, a);\nendmodule\n";
        assert!(matches!(
            parse_verilog_subset(src, &sidecar()),
            Err(NetlistError::UnsupportedConstruct { line: 3, .. })
        ));
    }

    #[test]
    fn constants_and_concatenation() {
        let src = "module top;\n  wire [1:0] w;\n  RAM r (.D({w[1], 1'b0}), .Q(w[0]));\n  INV u (.A(w[0]), .Y(w[1]));\nendmodule\n";
        let n = parse_verilog_subset(src, &sidecar()).unwrap();
        assert_eq!(n.nets.len(), 2);
    }
}
