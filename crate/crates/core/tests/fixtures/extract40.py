#!/usr/bin/env python3
"""Module docstring.
# fake inside docstring
"""
import os  # trailing comment

# First real run starts here
# and continues
# x = os.getcwd()

def f(a):
    """Docstring with
    # fake comment
    and more."""
    s = "# not a comment"
    t = '''
# fake in triple single
'''
    return a  # trailing


class C:
    value = 1  # trailing

    def g(self):
        url = "http://x/#frag"
        # second run
        # y = self.value
        return self.value


data = {
    "k": "#v",  # trailing
}
r = r"\#raw"
b = b"# bytes"
f2 = f"{data!r} # in fstring"
e = "escaped \" # still string"
z = 3
print(z)
