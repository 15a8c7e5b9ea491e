//! Hierarchy inlining, width resolution and condition flattening.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::{self, Direction, ExprKind as A, Item, Module, ModuleTree, Sensitivity, Span, Stmt};
use super::error::HdlError;
use super::lower::{Lowerer, Names, NoValues, Resolved};
use super::netlist::{
    Assignment, Expr, ExprKind, FlatNetlist, Reset, SignalDecl, SignalId, SignalKind, Target,
    Timing,
};

#[derive(Clone, Debug, Default)]
pub struct ElabOptions {
    /// Top module; defaults to the only module nobody instantiates.
    pub top: Option<String>,
    /// Parameter overrides for the top module.
    pub params: Vec<(String, u64)>,
}

pub fn elaborate(tree: &ModuleTree) -> Result<FlatNetlist, HdlError> {
    elaborate_with(tree, &ElabOptions::default())
}

pub fn elaborate_with(tree: &ModuleTree, opts: &ElabOptions) -> Result<FlatNetlist, HdlError> {
    let top = match &opts.top {
        Some(name) => tree.module(name).ok_or_else(|| HdlError::UnresolvedInstance {
            span: Span::default(),
            module: name.clone(),
        })?,
        None => {
            let roots = tree.roots();
            match roots.as_slice() {
                [m] => *m,
                [] => return Err(HdlError::elab(Span::default(), "no top module (empty input or circular instantiation)")),
                many => {
                    let names: Vec<&str> = many.iter().map(|m| m.name.as_str()).collect();
                    return Err(HdlError::elab(
                        many[0].span,
                        format!("ambiguous top module, candidates: {}", names.join(", ")),
                    ));
                }
            }
        }
    };
    let overrides = opts
        .params
        .iter()
        .map(|(n, v)| (n.clone(), (*v, 32)))
        .collect();
    let mut b = Builder {
        tree,
        protos: Vec::new(),
        by_name: HashMap::new(),
        raws: Vec::new(),
        order: 0,
        group: 0,
        clocks: Vec::new(),
        resets: Vec::new(),
        branch_pairs: Vec::new(),
        stack: Vec::new(),
    };
    b.instantiate(top, "", &overrides, true, top.span)?;
    b.finish(top.name.clone())
}

struct Proto {
    name: String,
    width: u32,
    depth: u32,
    memory: bool,
    signed: bool,
    port: Option<Direction>,
    span: Span,
}

struct Raw {
    target: Target,
    source: Expr,
    condition: Expr,
    timing: Timing,
    order: usize,
    group: usize,
    span: Span,
}

struct Scope {
    names: HashMap<String, Resolved>,
}

impl Scope {
    fn signal(&self, name: &str) -> Option<SignalId> {
        match self.names.get(name) {
            Some(Resolved::Signal { id, .. }) => Some(*id),
            _ => None,
        }
    }

    fn lw(&self) -> Lowerer<'_, Scope> {
        Lowerer::new(self)
    }
}

impl Names for Scope {
    fn resolve(&self, name: &str, span: Span) -> Result<Resolved, HdlError> {
        if name.contains('.') {
            return Err(HdlError::unsupported(span, format!("hierarchical reference `{name}`")));
        }
        self.names
            .get(name)
            .copied()
            .ok_or_else(|| HdlError::elab(span, format!("undeclared identifier `{name}`")))
    }
}

struct Builder<'t> {
    tree: &'t ModuleTree,
    protos: Vec<Proto>,
    by_name: HashMap<String, SignalId>,
    raws: Vec<Raw>,
    order: usize,
    group: usize,
    clocks: Vec<(SignalId, Span)>,
    resets: Vec<(SignalId, bool)>,
    branch_pairs: Vec<(Expr, Expr)>,
    stack: Vec<String>,
}

/// A procedural assignment before override resolution.
struct Pending {
    target: Target,
    source: Expr,
    path: Expr,
    blocking: bool,
    span: Span,
    order: usize,
}

impl<'t> Builder<'t> {
    fn fresh_group(&mut self) -> usize {
        self.group += 1;
        self.group
    }

    fn next_order(&mut self) -> usize {
        self.order += 1;
        self.order - 1
    }

    fn declare(&mut self, scope: &mut Scope, prefix: &str, p: Proto) -> Result<SignalId, HdlError> {
        let local = p.name.clone();
        if scope.names.contains_key(&local) {
            return Err(HdlError::elab(p.span, format!("`{local}` declared twice")));
        }
        let full = format!("{prefix}{local}");
        let id = SignalId(self.protos.len() as u32);
        self.by_name.insert(full.clone(), id);
        scope.names.insert(
            local,
            Resolved::Signal {
                id,
                width: p.width,
                signed: p.signed,
                memory: p.memory,
            },
        );
        self.protos.push(Proto { name: full, ..p });
        Ok(id)
    }

    fn range_width(&self, scope: &Scope, r: &Option<ast::Range>) -> Result<u32, HdlError> {
        let Some(r) = r else { return Ok(1) };
        let msb = scope.lw().const_eval(&r.msb)?;
        let lsb = scope.lw().const_eval(&r.lsb)?;
        if lsb != 0 {
            return Err(HdlError::unsupported(r.lsb.span, "vector range with nonzero LSB"));
        }
        if msb >= 64 {
            return Err(HdlError::unsupported(r.msb.span, "vector wider than 64 bits"));
        }
        Ok(msb as u32 + 1)
    }

    fn instantiate(
        &mut self,
        m: &Module,
        prefix: &str,
        overrides: &HashMap<String, (u64, u32)>,
        is_top: bool,
        at: Span,
    ) -> Result<Scope, HdlError> {
        if self.stack.contains(&m.name) {
            return Err(HdlError::elab(at, format!("recursive instantiation of `{}`", m.name)));
        }
        self.stack.push(m.name.clone());
        let mut scope = Scope {
            names: HashMap::new(),
        };
        let mut used = HashSet::new();
        let body_params = m.items.iter().filter_map(|i| match i {
            Item::Param(p) => Some(p),
            _ => None,
        });
        for p in m.params.iter().chain(body_params) {
            let value = match overrides.get(&p.name) {
                Some(v) if !p.local => {
                    used.insert(p.name.clone());
                    *v
                }
                _ => {
                    let e = scope.lw().lower_self(&p.value)?;
                    if !e.signals().is_empty() {
                        return Err(HdlError::elab(p.span, "parameter value is not constant"));
                    }
                    (e.eval(&NoValues), e.width)
                }
            };
            scope.names.insert(
                p.name.clone(),
                Resolved::Param {
                    value: value.0,
                    width: value.1,
                },
            );
        }
        if let Some(bad) = overrides.keys().find(|k| !used.contains(*k)) {
            return Err(HdlError::elab(at, format!("module `{}` has no parameter `{bad}`", m.name)));
        }
        for port in &m.ports {
            let width = self.range_width(&scope, &port.range)?;
            self.declare(
                &mut scope,
                prefix,
                Proto {
                    name: port.name.clone(),
                    width,
                    depth: 1,
                    memory: false,
                    signed: port.signed,
                    port: if is_top { Some(port.dir) } else { None },
                    span: port.span,
                },
            )?;
        }
        for item in &m.items {
            if let Item::Net(n) = item {
                let width = self.range_width(&scope, &n.range)?;
                for nn in &n.names {
                    let (memory, depth) = match &nn.array {
                        None => (false, 1),
                        Some(r) => {
                            if n.kind != ast::NetKind::Reg {
                                return Err(HdlError::unsupported(nn.span, "wire array"));
                            }
                            let a = scope.lw().const_eval(&r.msb)?;
                            let b = scope.lw().const_eval(&r.lsb)?;
                            if a.min(b) != 0 {
                                return Err(HdlError::unsupported(nn.span, "memory range not starting at 0"));
                            }
                            let depth = a.max(b) + 1;
                            if depth > 1 << 16 {
                                return Err(HdlError::unsupported(nn.span, "memory deeper than 65536 words"));
                            }
                            (true, depth as u32)
                        }
                    };
                    self.declare(
                        &mut scope,
                        prefix,
                        Proto {
                            name: nn.name.clone(),
                            width,
                            depth,
                            memory,
                            signed: n.signed,
                            port: None,
                            span: nn.span,
                        },
                    )?;
                }
            }
        }
        for item in &m.items {
            match item {
                Item::Net(n) => {
                    for nn in &n.names {
                        if let Some(init) = &nn.init {
                            let lv = ast::LValue {
                                name: nn.name.clone(),
                                select: None,
                                span: nn.span,
                            };
                            self.continuous(&scope, &lv, init, nn.span)?;
                        }
                    }
                }
                Item::Param(_) => {}
                Item::Assign(a) => self.continuous(&scope, &a.lhs, &a.rhs, a.span)?,
                Item::Always(a) => self.always(&scope, a)?,
                Item::Instance(inst) => self.instance(&scope, prefix, inst)?,
            }
        }
        self.stack.pop();
        Ok(scope)
    }

    fn continuous(
        &mut self,
        scope: &Scope,
        lhs: &ast::LValue,
        rhs: &ast::Expr,
        span: Span,
    ) -> Result<(), HdlError> {
        let target = self.target(scope, lhs)?;
        if matches!(target, Target::Word { .. }) {
            return Err(HdlError::unsupported(span, "continuous assignment to a memory word"));
        }
        let width = self.target_width(&target);
        let source = scope.lw().lower_assign(rhs, width)?;
        let order = self.next_order();
        let group = self.fresh_group();
        self.raws.push(Raw {
            target,
            source,
            condition: Expr::bool_const(true),
            timing: Timing::Combinational,
            order,
            group,
            span,
        });
        Ok(())
    }

    fn instance(&mut self, scope: &Scope, prefix: &str, inst: &ast::Instance) -> Result<(), HdlError> {
        let child = self.tree.module(&inst.module).ok_or_else(|| HdlError::UnresolvedInstance {
            span: inst.span,
            module: inst.module.clone(),
        })?;
        let mut overrides = HashMap::new();
        for (name, e) in &inst.params {
            let v = scope.lw().lower_self(e)?;
            if !v.signals().is_empty() {
                return Err(HdlError::elab(e.span, "parameter override is not constant"));
            }
            overrides.insert(name.clone(), (v.eval(&NoValues), v.width));
        }
        if scope.names.contains_key(&inst.name) {
            return Err(HdlError::elab(inst.span, format!("instance name `{}` clashes with a signal", inst.name)));
        }
        let child_prefix = format!("{prefix}{}.", inst.name);
        let child_scope = self.instantiate(child, &child_prefix, &overrides, false, inst.span)?;
        let mut seen = HashSet::new();
        for c in &inst.conns {
            let port = child.ports.iter().find(|p| p.name == c.port).ok_or_else(|| {
                HdlError::elab(c.span, format!("module `{}` has no port `{}`", child.name, c.port))
            })?;
            if !seen.insert(c.port.clone()) {
                return Err(HdlError::elab(c.span, format!("port `{}` connected twice", c.port)));
            }
            let child_sig = child_scope.signal(&port.name).unwrap();
            let cw = self.protos[child_sig.index()].width;
            let Some(e) = &c.expr else { continue };
            let order = self.next_order();
            let group = self.fresh_group();
            match port.dir {
                Direction::Input => {
                    let source = scope.lw().lower_assign(e, cw)?;
                    self.raws.push(Raw {
                        target: Target::Bits {
                            signal: child_sig,
                            lsb: 0,
                            width: cw,
                        },
                        source,
                        condition: Expr::bool_const(true),
                        timing: Timing::Combinational,
                        order,
                        group,
                        span: c.span,
                    });
                }
                Direction::Output => {
                    let lv = expr_as_lvalue(e)?;
                    let target = self.target(scope, &lv)?;
                    if matches!(target, Target::Word { .. }) {
                        return Err(HdlError::unsupported(c.span, "output port driving a memory word"));
                    }
                    let tw = self.target_width(&target);
                    let signed = self.protos[child_sig.index()].signed;
                    let source = Expr::signal(child_sig, cw).resize(tw, signed);
                    self.raws.push(Raw {
                        target,
                        source,
                        condition: Expr::bool_const(true),
                        timing: Timing::Combinational,
                        order,
                        group,
                        span: c.span,
                    });
                }
            }
        }
        for port in &child.ports {
            if port.dir == Direction::Input && !seen.contains(&port.name) {
                // unconnected inputs are tied low
                let sig = child_scope.signal(&port.name).unwrap();
                let w = self.protos[sig.index()].width;
                let order = self.next_order();
                let group = self.fresh_group();
                self.raws.push(Raw {
                    target: Target::Bits {
                        signal: sig,
                        lsb: 0,
                        width: w,
                    },
                    source: Expr::constant(0, w),
                    condition: Expr::bool_const(true),
                    timing: Timing::Combinational,
                    order,
                    group,
                    span: inst.span,
                });
            }
        }
        Ok(())
    }

    fn always(&mut self, scope: &Scope, a: &ast::Always) -> Result<(), HdlError> {
        let timing = match &a.sens {
            Sensitivity::Posedge(clk) => {
                let id = self.resolve(scope, clk, a.span)?;
                self.clocks.push((id, a.span));
                Timing::Clocked
            }
            Sensitivity::Star => Timing::Combinational,
        };
        if timing == Timing::Clocked {
            self.detect_reset(scope, &a.body);
        }
        let mut pending = Vec::new();
        self.flatten(scope, &a.body, &Expr::bool_const(true), &mut pending)?;

        if timing == Timing::Combinational {
            if let Some(p) = pending.iter().find(|p| matches!(p.target, Target::Word { .. })) {
                return Err(HdlError::unsupported(p.span, "memory write outside a clocked block"));
            }
            let assigned = self.definitely_assigned(scope, &a.body)?;
            for p in &pending {
                if let Target::Bits { signal, lsb, width } = p.target {
                    if (lsb..lsb + width).any(|b| !assigned.contains(&(signal, b))) {
                        return Err(HdlError::unsupported(
                            p.span,
                            format!(
                                "incomplete assignment to `{}` in a combinational block (latch)",
                                self.protos[signal.index()].name
                            ),
                        ));
                    }
                }
            }
        } else {
            // blocking writes in a clocked block must not be read back there
            let mut read = BTreeSet::new();
            for p in &pending {
                read.extend(p.source.signals());
                read.extend(p.path.signals());
                if let Target::Word { addr, .. } = &p.target {
                    read.extend(addr.signals());
                }
            }
            if let Some(p) = pending
                .iter()
                .find(|p| p.blocking && read.contains(&p.target.signal()))
            {
                return Err(HdlError::unsupported(
                    p.span,
                    "blocking assignment whose target is read in the same clocked block",
                ));
            }
        }

        let group = self.fresh_group();
        for i in 0..pending.len() {
            let mut cond = pending[i].path.clone();
            for j in i + 1..pending.len() {
                match overlap(&pending[i].target, &pending[j].target) {
                    Overlap::None => {}
                    Overlap::Covers => cond = cond.and(pending[j].path.clone().not()),
                    Overlap::Partial => {
                        return Err(HdlError::unsupported(
                            pending[j].span,
                            "assignment partially overriding an earlier one in the same block",
                        ))
                    }
                }
            }
            if cond.is_false() {
                continue;
            }
            let p = &pending[i];
            self.raws.push(Raw {
                target: p.target.clone(),
                source: p.source.clone(),
                condition: cond,
                timing,
                order: p.order,
                group,
                span: p.span,
            });
        }
        Ok(())
    }

    fn detect_reset(&mut self, scope: &Scope, body: &Stmt) {
        let mut s = body;
        while let Stmt::Block(items, _) = s {
            match items.as_slice() {
                [only] => s = only,
                _ => return,
            }
        }
        let Stmt::If { cond, .. } = s else { return };
        let (name, active_high) = match &cond.kind {
            A::Ident(n) => (n, true),
            A::Unary(ast::UnaryOp::LogNot | ast::UnaryOp::Not, inner) => match &inner.kind {
                A::Ident(n) => (n, false),
                _ => return,
            },
            _ => return,
        };
        if let Some(id) = scope.signal(name) {
            let p = &self.protos[id.index()];
            if p.width == 1 && (name.contains("rst") || name.contains("reset")) {
                self.resets.push((id, active_high));
            }
        }
    }

    fn flatten(
        &mut self,
        scope: &Scope,
        s: &Stmt,
        path: &Expr,
        out: &mut Vec<Pending>,
    ) -> Result<(), HdlError> {
        match s {
            Stmt::Empty(_) => {}
            Stmt::Block(items, _) => {
                for i in items {
                    self.flatten(scope, i, path, out)?;
                }
            }
            Stmt::If {
                cond, then, els, ..
            } => {
                let c = scope.lw().lower_self(cond)?.truthy();
                let then_path = path.clone().and(c.clone());
                let else_path = path.clone().and(c.not());
                self.branch_pairs.push((then_path.clone(), else_path.clone()));
                self.flatten(scope, then, &then_path, out)?;
                if let Some(e) = els {
                    self.flatten(scope, e, &else_path, out)?;
                }
            }
            Stmt::Case {
                subject,
                arms,
                default,
                ..
            } => {
                let (sw, ss) = scope.lw().self_type(subject)?;
                let mut arm_conds = Vec::new();
                let mut const_labels = Some(HashSet::new());
                for arm in arms {
                    let mut alts = Vec::new();
                    for l in &arm.labels {
                        let (lw, ls) = scope.lw().self_type(l)?;
                        let w = sw.max(lw);
                        let signed = ss && ls;
                        let a = scope.lw().lower(subject, w, signed)?;
                        let b = scope.lw().lower(l, w, signed)?;
                        if let (Some(set), Some(v)) = (&mut const_labels, b.as_const()) {
                            if !set.insert(v) {
                                const_labels = None;
                            }
                        } else {
                            const_labels = None;
                        }
                        alts.push(Expr::eq(a, b));
                    }
                    arm_conds.push(Expr::any(alts));
                }
                // distinct constant labels are already exclusive; otherwise
                // the first matching arm wins
                let exclusive = const_labels.is_some();
                let mut taken = Vec::new();
                let mut arm_paths = Vec::new();
                for c in &arm_conds {
                    let mut cond = c.clone();
                    if !exclusive {
                        for t in &taken {
                            cond = cond.and(Expr::clone(t).not());
                        }
                    }
                    taken.push(c.clone());
                    arm_paths.push(path.clone().and(cond));
                }
                let default_path = path
                    .clone()
                    .and(Expr::all(arm_conds.iter().map(|c| c.clone().not())));
                let mut all_paths = arm_paths.clone();
                all_paths.push(default_path.clone());
                for i in 0..all_paths.len() {
                    for j in i + 1..all_paths.len() {
                        self.branch_pairs.push((all_paths[i].clone(), all_paths[j].clone()));
                    }
                }
                for (arm, p) in arms.iter().zip(&arm_paths) {
                    self.flatten(scope, &arm.body, p, out)?;
                }
                if let Some(d) = default {
                    self.flatten(scope, d, &default_path, out)?;
                }
            }
            Stmt::Assign {
                lhs,
                rhs,
                nonblocking,
                span,
            } => {
                let target = self.target(scope, lhs)?;
                let width = self.target_width(&target);
                let source = scope.lw().lower_assign(rhs, width)?;
                let order = self.next_order();
                out.push(Pending {
                    target,
                    source,
                    path: path.clone(),
                    blocking: !nonblocking,
                    span: *span,
                    order,
                });
            }
        }
        Ok(())
    }

    fn definitely_assigned(
        &self,
        scope: &Scope,
        s: &Stmt,
    ) -> Result<HashSet<(SignalId, u32)>, HdlError> {
        Ok(match s {
            Stmt::Empty(_) => HashSet::new(),
            Stmt::Block(items, _) => {
                let mut acc = HashSet::new();
                for i in items {
                    acc.extend(self.definitely_assigned(scope, i)?);
                }
                acc
            }
            Stmt::If { then, els, .. } => match els {
                None => HashSet::new(),
                Some(e) => {
                    let a = self.definitely_assigned(scope, then)?;
                    let b = self.definitely_assigned(scope, e)?;
                    a.intersection(&b).copied().collect()
                }
            },
            Stmt::Case {
                subject,
                arms,
                default,
                ..
            } => {
                let mut branches = Vec::new();
                for arm in arms {
                    branches.push(self.definitely_assigned(scope, &arm.body)?);
                }
                match default {
                    Some(d) => branches.push(self.definitely_assigned(scope, d)?),
                    None => {
                        let (sw, _) = scope.lw().self_type(subject)?;
                        let mut values = HashSet::new();
                        for l in arms.iter().flat_map(|a| &a.labels) {
                            match scope.lw().lower(l, sw.max(32), false)?.as_const() {
                                Some(v) => {
                                    values.insert(v);
                                }
                                None => return Ok(HashSet::new()),
                            }
                        }
                        if sw > 16 || values.len() as u64 != 1u64 << sw {
                            return Ok(HashSet::new());
                        }
                    }
                }
                let mut it = branches.into_iter();
                let first = it.next().unwrap_or_default();
                it.fold(first, |acc, b| acc.intersection(&b).copied().collect())
            }
            Stmt::Assign { lhs, .. } => match self.target(scope, lhs)? {
                Target::Bits { signal, lsb, width } => (lsb..lsb + width).map(|b| (signal, b)).collect(),
                Target::Word { .. } => HashSet::new(),
            },
        })
    }

    fn resolve(&self, scope: &Scope, name: &str, span: Span) -> Result<SignalId, HdlError> {
        match scope.resolve(name, span)? {
            Resolved::Signal { id, .. } => Ok(id),
            _ => Err(HdlError::elab(span, format!("`{name}` is not a signal"))),
        }
    }

    fn target(&self, scope: &Scope, lv: &ast::LValue) -> Result<Target, HdlError> {
        let id = self.resolve(scope, &lv.name, lv.span)?;
        let p = &self.protos[id.index()];
        if p.memory {
            let Some(ast::Select::Index(addr)) = &lv.select else {
                return Err(HdlError::unsupported(lv.span, "memory write without a word address"));
            };
            let addr = scope.lw().lower_self(addr)?;
            return Ok(Target::Word { memory: id, addr });
        }
        match &lv.select {
            None => Ok(Target::Bits {
                signal: id,
                lsb: 0,
                width: p.width,
            }),
            Some(ast::Select::Index(i)) => {
                let idx = scope.lw().lower_self(i)?;
                let Some(b) = idx.as_const().filter(|_| idx.signals().is_empty()) else {
                    return Err(HdlError::unsupported(lv.span, "bit write with a run-time index"));
                };
                if b >= u64::from(p.width) {
                    return Err(HdlError::elab(lv.span, format!("bit {b} out of range for `{}`", lv.name)));
                }
                Ok(Target::Bits {
                    signal: id,
                    lsb: b as u32,
                    width: 1,
                })
            }
            Some(ast::Select::Part(a, b)) => {
                let msb = scope.lw().const_eval(a)?;
                let lsb = scope.lw().const_eval(b)?;
                if msb < lsb || msb >= u64::from(p.width) {
                    return Err(HdlError::elab(lv.span, format!("part-select [{msb}:{lsb}] out of range for `{}`", lv.name)));
                }
                Ok(Target::Bits {
                    signal: id,
                    lsb: lsb as u32,
                    width: (msb - lsb + 1) as u32,
                })
            }
        }
    }

    fn target_width(&self, t: &Target) -> u32 {
        match t {
            Target::Bits { width, .. } => *width,
            Target::Word { memory, .. } => self.protos[memory.index()].width,
        }
    }

    fn finish(self, top: String) -> Result<FlatNetlist, HdlError> {
        let n = self.protos.len();
        let mut comb = vec![false; n];
        let mut clocked = vec![false; n];
        let mut writes: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, r) in self.raws.iter().enumerate() {
            let s = r.target.signal().index();
            writes[s].push(i);
            match r.timing {
                Timing::Combinational => comb[s] = true,
                Timing::Clocked => clocked[s] = true,
            }
        }
        // drivers from different groups must not overlap
        for (s, ws) in writes.iter().enumerate() {
            for (x, &i) in ws.iter().enumerate() {
                for &j in &ws[x + 1..] {
                    let (a, b) = (&self.raws[i], &self.raws[j]);
                    if a.group != b.group && overlap(&a.target, &b.target) != Overlap::None {
                        return Err(HdlError::elab(
                            b.span,
                            format!("multiple drivers for `{}`", self.protos[s].name),
                        ));
                    }
                }
            }
        }
        let mut read = vec![false; n];
        for r in &self.raws {
            for s in r.source.signals().into_iter().chain(r.condition.signals()) {
                read[s.index()] = true;
            }
            if let Target::Word { addr, .. } = &r.target {
                for s in addr.signals() {
                    read[s.index()] = true;
                }
            }
        }
        let mut signals = Vec::with_capacity(n);
        for (i, p) in self.protos.iter().enumerate() {
            if comb[i] && clocked[i] {
                return Err(HdlError::elab(p.span, format!("`{}` is assigned both combinationally and under a clock", p.name)));
            }
            let kind = match p.port {
                Some(Direction::Input) => {
                    if comb[i] || clocked[i] {
                        return Err(HdlError::elab(p.span, format!("input `{}` is assigned", p.name)));
                    }
                    SignalKind::Input
                }
                Some(Direction::Output) => {
                    if clocked[i] {
                        SignalKind::Register
                    } else if comb[i] {
                        SignalKind::Output
                    } else {
                        return Err(HdlError::elab(p.span, format!("output `{}` is never assigned", p.name)));
                    }
                }
                None if p.memory => {
                    if comb[i] {
                        return Err(HdlError::unsupported(p.span, "combinational memory write"));
                    }
                    if writes[i].len() > 1 {
                        return Err(HdlError::unsupported(
                            self.raws[writes[i][1]].span,
                            format!("memory `{}` with more than one write port", p.name),
                        ));
                    }
                    if writes[i].is_empty() {
                        return Err(HdlError::elab(p.span, format!("memory `{}` is never written", p.name)));
                    }
                    SignalKind::Memory
                }
                None => {
                    if clocked[i] {
                        SignalKind::Register
                    } else {
                        if !comb[i] && read[i] {
                            return Err(HdlError::elab(p.span, format!("`{}` is read but never assigned", p.name)));
                        }
                        SignalKind::Wire
                    }
                }
            };
            signals.push(SignalDecl {
                id: SignalId(i as u32),
                name: p.name.clone(),
                width: p.width,
                kind,
                depth: p.depth,
                output: p.port == Some(Direction::Output),
                signed: p.signed,
            });
        }
        let assignments: Vec<Assignment> = {
            let mut raws: Vec<&Raw> = self.raws.iter().collect();
            raws.sort_by_key(|r| r.order);
            raws.into_iter()
                .enumerate()
                .map(|(id, r)| Assignment {
                    id,
                    target: r.target.clone(),
                    source: r.source.clone(),
                    condition: r.condition.clone(),
                    timing: r.timing,
                    order: r.order,
                    span: r.span,
                })
                .collect()
        };
        let mut drivers = vec![Vec::new(); n];
        for a in &assignments {
            drivers[a.target.signal().index()].push(a.id);
        }

        // follow `wire = wire` port plumbing back to a top-level input
        let root = |mut s: SignalId| -> SignalId {
            for _ in 0..n {
                if signals[s.index()].kind == SignalKind::Input {
                    break;
                }
                let ds = &drivers[s.index()];
                if ds.len() != 1 {
                    break;
                }
                let a = &assignments[ds[0]];
                match (&a.source.kind, a.timing, a.is_unconditional()) {
                    (ExprKind::Signal(src), Timing::Combinational, true) => s = *src,
                    _ => break,
                }
            }
            s
        };
        let mut clock = None;
        for &(c, span) in &self.clocks {
            let r = root(c);
            if signals[r.index()].kind != SignalKind::Input || signals[r.index()].width != 1 {
                return Err(HdlError::elab(span, format!("clock `{}` is not a 1-bit top-level input", signals[c.index()].name)));
            }
            match clock {
                None => clock = Some(r),
                Some(prev) if prev != r => {
                    return Err(HdlError::MultipleClocks {
                        clocks: vec![signals[prev.index()].name.clone(), signals[r.index()].name.clone()],
                    })
                }
                _ => {}
            }
        }
        let reset = self.resets.first().map(|&(s, active_high)| Reset {
            signal: root(s),
            active_high,
        });

        let comb_order = comb_order(&signals, &assignments)?;
        Ok(FlatNetlist {
            top,
            by_name: self.by_name,
            signals,
            assignments,
            clock,
            reset,
            branch_pairs: self.branch_pairs,
            drivers,
            comb_order,
        })
    }
}

/// Merges an auxiliary design into `base`.
///
/// Aux signals are renamed `<prefix>.<name>`. Each bound aux input becomes a
/// wire driven by the given expression over `base` signals, and the aux clock
/// follows the base clock. Aux outputs become internal signals.
pub fn attach(base: &FlatNetlist, aux: &FlatNetlist, prefix: &str, bindings: &[(&str, Expr)]) -> Result<FlatNetlist, HdlError> {
    let offset = base.signals.len() as u32;
    let remap = |s: SignalId| SignalId(s.0 + offset);
    let mut signals = base.signals.clone();
    let mut assignments = base.assignments.clone();
    let mut by_name = base.by_name.clone();
    let mut next_order = assignments.iter().map(|a| a.order + 1).max().unwrap_or(0);
    let mut bound = HashSet::new();
    for (name, e) in bindings {
        let id = aux
            .lookup(name)
            .filter(|&id| aux.signal(id).kind == SignalKind::Input)
            .ok_or_else(|| HdlError::elab(Span::default(), format!("aux design has no input `{name}`")))?;
        if aux.signal(id).width != e.width {
            return Err(HdlError::elab(
                Span::default(),
                format!("binding for `{name}` is {} bits, port is {}", e.width, aux.signal(id).width),
            ));
        }
        bound.insert(id);
    }
    for s in &aux.signals {
        let mut d = s.clone();
        d.id = remap(s.id);
        d.name = format!("{prefix}.{}", s.name);
        d.output = false;
        if d.kind == SignalKind::Output {
            d.kind = SignalKind::Wire;
        }
        let is_clock = Some(s.id) == aux.clock;
        if bound.contains(&s.id) || (is_clock && base.clock.is_some()) {
            d.kind = SignalKind::Wire;
        }
        if by_name.insert(d.name.clone(), d.id).is_some() {
            return Err(HdlError::elab(Span::default(), format!("name clash on `{}`", d.name)));
        }
        signals.push(d);
    }
    let mut push = |target: Target, source: Expr, condition: Expr, timing: Timing, span: Span| {
        assignments.push(Assignment {
            id: assignments.len(),
            target,
            source,
            condition,
            timing,
            order: next_order,
            span,
        });
        next_order += 1;
    };
    for (name, e) in bindings {
        let id = remap(aux.lookup(name).expect("checked above"));
        push(
            Target::Bits { signal: id, lsb: 0, width: e.width },
            e.clone(),
            Expr::bool_const(true),
            Timing::Combinational,
            Span::default(),
        );
    }
    if let (Some(ac), Some(bc)) = (aux.clock, base.clock) {
        push(
            Target::Bits { signal: remap(ac), lsb: 0, width: 1 },
            Expr::signal(bc, 1),
            Expr::bool_const(true),
            Timing::Combinational,
            Span::default(),
        );
    }
    for a in &aux.assignments {
        let target = match &a.target {
            Target::Bits { signal, lsb, width } => Target::Bits {
                signal: remap(*signal),
                lsb: *lsb,
                width: *width,
            },
            Target::Word { memory, addr } => Target::Word {
                memory: remap(*memory),
                addr: addr.map_signals(&remap),
            },
        };
        push(
            target,
            a.source.map_signals(&remap),
            a.condition.map_signals(&remap),
            a.timing,
            a.span,
        );
    }
    let mut drivers = vec![Vec::new(); signals.len()];
    for a in &assignments {
        drivers[a.target.signal().index()].push(a.id);
    }
    let comb_order = comb_order(&signals, &assignments)?;
    let mut branch_pairs = base.branch_pairs.clone();
    branch_pairs.extend(
        aux.branch_pairs
            .iter()
            .map(|(a, b)| (a.map_signals(&remap), b.map_signals(&remap))),
    );
    Ok(FlatNetlist {
        top: base.top.clone(),
        by_name,
        signals,
        assignments,
        clock: base.clock,
        reset: base.reset,
        branch_pairs,
        drivers,
        comb_order,
    })
}

fn comb_order(signals: &[SignalDecl], assignments: &[Assignment]) -> Result<Vec<SignalId>, HdlError> {
    let is_comb = |s: SignalId| matches!(signals[s.index()].kind, SignalKind::Wire | SignalKind::Output);
    let n = signals.len();
    let mut deps: Vec<BTreeSet<SignalId>> = vec![BTreeSet::new(); n];
    for a in assignments {
        if a.timing != Timing::Combinational {
            continue;
        }
        let t = a.target.signal();
        for s in a.source.signals().into_iter().chain(a.condition.signals()) {
            if is_comb(s) {
                deps[t.index()].insert(s);
            }
        }
    }
    // iterative DFS with colors so that a cycle can be reported
    let mut color = vec![0u8; n];
    let mut order = Vec::new();
    for start in 0..n {
        let sid = SignalId(start as u32);
        if !is_comb(sid) || color[start] != 0 {
            continue;
        }
        let mut stack: Vec<(SignalId, Vec<SignalId>)> = vec![(sid, deps[start].iter().copied().collect())];
        color[start] = 1;
        while let Some((node, pending)) = stack.last_mut() {
            if let Some(next) = pending.pop() {
                match color[next.index()] {
                    0 => {
                        color[next.index()] = 1;
                        let d = deps[next.index()].iter().copied().collect();
                        stack.push((next, d));
                    }
                    1 => {
                        let pos = stack.iter().position(|(s, _)| *s == next).unwrap();
                        let mut names: Vec<String> =
                            stack[pos..].iter().map(|(s, _)| signals[s.index()].name.clone()).collect();
                        names.push(signals[next.index()].name.clone());
                        return Err(HdlError::CombinationalCycle { signals: names });
                    }
                    _ => {}
                }
            } else {
                let node = *node;
                color[node.index()] = 2;
                order.push(node);
                stack.pop();
            }
        }
    }
    Ok(order)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Overlap {
    None,
    /// The later target covers every bit of the earlier one.
    Covers,
    Partial,
}

fn overlap(earlier: &Target, later: &Target) -> Overlap {
    match (earlier, later) {
        (
            Target::Bits {
                signal: s1,
                lsb: l1,
                width: w1,
            },
            Target::Bits {
                signal: s2,
                lsb: l2,
                width: w2,
            },
        ) => {
            if s1 != s2 || l1 + w1 <= *l2 || l2 + w2 <= *l1 {
                Overlap::None
            } else if l2 <= l1 && l1 + w1 <= l2 + w2 {
                Overlap::Covers
            } else {
                Overlap::Partial
            }
        }
        (Target::Word { memory: m1, .. }, Target::Word { memory: m2, .. }) if m1 == m2 => {
            Overlap::Partial
        }
        _ => Overlap::None,
    }
}

fn expr_as_lvalue(e: &ast::Expr) -> Result<ast::LValue, HdlError> {
    let (name, select) = match &e.kind {
        A::Ident(n) => (n.clone(), None),
        A::Index(n, i) => (n.clone(), Some(ast::Select::Index(i.clone()))),
        A::Part(n, a, b) => (n.clone(), Some(ast::Select::Part(a.clone(), b.clone()))),
        _ => return Err(HdlError::unsupported(e.span, "output port connected to a non-assignable expression")),
    };
    Ok(ast::LValue {
        name,
        select,
        span: e.span,
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::hdl::{parse_rtl, pretty_expr};

    fn elab(src: &str) -> Result<FlatNetlist, HdlError> {
        elaborate(&parse_rtl(src).unwrap())
    }

    #[test]
    fn guarded_register_write() {
        let n = elab(
            "module t(input clk, input en, input [3:0] d, output reg [3:0] r);
               always @(posedge clk) if (en) r <= d;
             endmodule",
        )
        .unwrap();
        assert_eq!(n.assignments.len(), 1);
        let a = &n.assignments[0];
        assert_eq!(a.timing, Timing::Clocked);
        assert_eq!(n.render(&a.condition), "(en == 1'b1)");
        assert_eq!(n.signal(n.lookup("r").unwrap()).kind, SignalKind::Register);
        assert_eq!(n.clock, n.lookup("clk"));
    }

    #[test]
    fn hierarchy_names_are_prefixed() {
        let n = elab(
            "module leaf(input a, output b); wire c; assign c = a; assign b = c; endmodule
             module top(input x, output y1, output y2);
               leaf u1(.a(x), .b(y1));
               leaf u2(.a(x), .b(y2));
             endmodule",
        )
        .unwrap();
        for name in ["u1.a", "u1.b", "u1.c", "u2.a", "u2.b", "u2.c"] {
            let id = n.lookup(name).unwrap();
            assert_eq!(n.hierarchical_name(id), format!("top.{name}"));
        }
        assert_eq!(n.lookup("top.u2.c"), n.lookup("u2.c"));
    }

    #[test]
    fn combinational_cycle_is_reported() {
        let err = elab("module t; wire a, b; assign a = b; assign b = a; endmodule").unwrap_err();
        match err {
            HdlError::CombinationalCycle { signals } => {
                let set: BTreeSet<_> = signals.iter().map(String::as_str).collect();
                assert_eq!(set, ["a", "b"].into_iter().collect());
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn later_assignment_overrides_earlier() {
        let n = elab(
            "module t(input c, output reg y);
               always @* begin y = 1'b0; if (c) y = 1'b1; end
             endmodule",
        )
        .unwrap();
        let conds: Vec<String> = n.assignments.iter().map(|a| pretty_expr_of(&n, &a.condition)).collect();
        assert_eq!(conds, vec!["(c == 1'b0)", "(c == 1'b1)"]);
    }

    fn pretty_expr_of(n: &FlatNetlist, e: &Expr) -> String {
        n.render(e)
    }

    #[test]
    fn latch_and_multi_clock_are_rejected() {
        let err = elab("module t(input c, input d, output reg y); always @* if (c) y = d; endmodule")
            .unwrap_err();
        assert!(matches!(err, HdlError::Unsupported { .. }), "{err}");
        let err = elab(
            "module t(input c1, input c2, output reg a, output reg b);
               always @(posedge c1) a <= 1'b1;
               always @(posedge c2) b <= 1'b1;
             endmodule",
        )
        .unwrap_err();
        assert!(matches!(err, HdlError::MultipleClocks { .. }), "{err}");
    }

    #[test]
    fn context_width_keeps_carry() {
        let n = elab(
            "module t(input [3:0] a, input [3:0] b, output [4:0] s); assign s = a + b; endmodule",
        )
        .unwrap();
        let mut sim = crate::hdl::Simulator::new(&n);
        sim.apply(&[(n.lookup("a").unwrap(), 15), (n.lookup("b").unwrap(), 1)]);
        assert_eq!(sim.value(n.lookup("s").unwrap()), 16);
        let _ = pretty_expr;
    }
}
