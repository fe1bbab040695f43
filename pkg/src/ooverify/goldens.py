"""Golden fixture sources: the worked examples the acceptance suite checks.

Kept as source strings so the suites run without any file layout assumptions;
the test fixtures under tests/fixtures mirror them for CLI use.
"""

# A two-call program whose transformation is checked verbatim.
ADD_OO = """\
var y : object;
ivar sum : integer;
method add(x: integer) { sum := sum + x }
y.add(1); y.add(2)
"""

ADD_EXPECTED_MAIN = "if y /= null -> add(y, 1) fi; if y /= null -> add(y, 2) fi"
ADD_EXPECTED_DECL = "proc add(this: object, x: integer) { sum[this] := sum[this] + x }"

# Linked-list search: this.find(z) follows `next` pointers until it sees z.
FIND_OO = """\
var z : object;
ivar next : object;
method find(u: object) { if u /= this -> next.find(u) fi' }
this.find(z)
"""

CHAIN3_STATE = "state { this = o0; z = o2; o0.next = o1; o1.next = o2; }"
CHAIN_NULL_STATE = "state { this = o0; z = o2; o0.next = o1; }"
CHAIN_CYCLE_STATE = "state { this = o0; z = o3; o0.next = o1; o1.next = o0; }"

# A method call on the null object: provable with postcondition false.
NULL_M_OO = """\
method m() { skip }
null.m()
"""

PO_NULL_M_PRF = """\
(rule WEAKEN
  (conclusion {true} null.m() {false})
  (rule CONSEQ
    (conclusion {true and null /= null} null.m() {false})
    (rule REC-I
      (conclusion {false} null.m() {false})
      (assumptions {false} null.m() {false})
      (assume 1)
      (rule BLOCK
        (conclusion {false} begin local this := null; skip end {false})
        (rule COMP
          (conclusion {false} this := null; skip {false})
          (rule ASSIGN (conclusion {false} this := null {false}))
          (rule SKIP (conclusion {false} skip {false})))))))
"""

# The same skeleton with postcondition true: structurally fine under the
# strong-partial system, but the non-null premise produces a counterexample.
SPO_NULL_M_PRF = """\
(rule REC-II
  (conclusion {true} null.m() {true})
  (assumptions {true} null.m() {true})
  (assume 1)
  (rule BLOCK
    (conclusion {true} begin local this := null; skip end {true})
    (rule COMP
      (conclusion {true} this := null; skip {true})
      (rule ASSIGN (conclusion {true} this := null {true}))
      (rule SKIP (conclusion {true} skip {true})))))
"""

# A strong-partial proof that does hold: the callee is known non-null.
S_M_OO = """\
var s : object;
method m() { skip }
s.m()
"""

SPO_S_M_PRF = """\
(rule REC-II
  (conclusion {s /= null} s.m() {true})
  (assumptions {s /= null} s.m() {true})
  (assume 1)
  (rule BLOCK
    (conclusion {s /= null} begin local this := s; skip end {true})
    (rule COMP
      (conclusion {s /= null} this := s; skip {true})
      (rule CONSEQ
        (conclusion {s /= null} this := s {true})
        (rule ASSIGN (conclusion {true} this := s {true})))
      (rule SKIP (conclusion {true} skip {true})))))
"""

# An instance-assignment proof: counting method over an integer field.
BUMP_OO = """\
var s : object;
ivar cnt : integer;
method bump() { cnt := cnt + 1 }
s.bump()
"""

PO_BUMP_PRF = """\
(rule REC-I
  (conclusion {s /= null and s.cnt = 0} s.bump() {s.cnt = 1})
  (assumptions {s /= null and s.cnt = 0} s.bump() {s.cnt = 1})
  (assume 1)
  (rule BLOCK
    (conclusion {s /= null and s.cnt = 0}
      begin local this := s; cnt := cnt + 1 end
      {s.cnt = 1})
    (rule COMP
      (conclusion {s /= null and s.cnt = 0} this := s; cnt := cnt + 1 {s.cnt = 1})
      (rule CONSEQ
        (conclusion {s /= null and s.cnt = 0} this := s {(s = this ? cnt + 1 : s.cnt) = 1})
        (rule ASSIGN
          (conclusion {(s = s ? s.cnt + 1 : s.cnt) = 1} this := s {(s = this ? cnt + 1 : s.cnt) = 1})))
      (rule ASSIGN-INST
        (conclusion {(s = this ? cnt + 1 : s.cnt) = 1} cnt := cnt + 1 {s.cnt = 1})))))
"""

# A failure-statement proof misfiled under the strong-partial kernel system:
# FAIL-I is not available there, so the checker must reject it.
FAILI_KRN = """\
if false -> skip fi
"""

FAILI_PRF = """\
(rule FAIL-I
  (conclusion {true} if false -> skip fi {true})
  (rule CONSEQ
    (conclusion {true and false} skip {true})
    (rule SKIP (conclusion {true} skip {true}))))
"""
