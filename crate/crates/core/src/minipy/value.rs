use super::literal::Literal;
use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

pub type ListRef = Rc<RefCell<Vec<Value>>>;

/// Runtime value. Lists are shared, mutable stores: two names bound to the
/// same list observe each other's in-place updates.
#[derive(Clone)]
pub enum Value {
    None,
    Bool(bool),
    Int(i64),
    List(ListRef),
}

impl Value {
    pub fn list(items: Vec<Value>) -> Value {
        Value::List(Rc::new(RefCell::new(items)))
    }

    pub fn int_list(items: &[i64]) -> Value {
        Value::list(items.iter().map(|i| Value::Int(*i)).collect())
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::None => "NoneType",
            Value::Bool(_) => "bool",
            Value::Int(_) => "int",
            Value::List(_) => "list",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::None => false,
            Value::Bool(b) => *b,
            Value::Int(i) => *i != 0,
            Value::List(l) => !l.borrow().is_empty(),
        }
    }

    /// Deep copy into an owned literal.
    pub fn to_literal(&self) -> Literal {
        match self {
            Value::None => Literal::None,
            Value::Bool(b) => Literal::Bool(*b),
            Value::Int(i) => Literal::Int(*i),
            Value::List(l) => Literal::List(l.borrow().iter().map(Value::to_literal).collect()),
        }
    }

    /// Fresh (unaliased) runtime value; fails for literals outside the
    /// interpreter's value universe.
    pub fn from_literal(lit: &Literal) -> Result<Value, String> {
        Ok(match lit {
            Literal::None => Value::None,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(i) => Value::Int(*i),
            Literal::List(items) => Value::list(
                items
                    .iter()
                    .map(Value::from_literal)
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            other => return Err(format!("unsupported value {}", other.repr())),
        })
    }

    pub fn repr(&self) -> String {
        self.to_literal().repr()
    }
}

/// Structural, type-strict equality (`True != 1`).
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::None, Value::None) => true,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::List(a), Value::List(b)) => {
                Rc::ptr_eq(a, b) || *a.borrow() == *b.borrow()
            }
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.repr())
    }
}
